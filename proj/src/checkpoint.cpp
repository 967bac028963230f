#include "ptilab/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

using nlohmann::json;

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(std::string_view text, std::string_view tensor) {
    std::array<int, 256> lookup;
    lookup.fill(-1);
    for (int k = 0; k < 64; ++k) lookup[static_cast<unsigned char>(kAlphabet[k])] = k;

    auto corrupt = [&](const char* why) {
        return CorruptionError("tensor '" + std::string(tensor) + "': " + why);
    };
    if (text.size() % 4 != 0) throw corrupt("base64 length is not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char ch = text[i + k];
            int digit = 0;
            if (ch == '=') {
                if (i + 4 != text.size() || k < 2) throw corrupt("misplaced base64 padding");
                ++pad;
            } else {
                if (pad) throw corrupt("misplaced base64 padding");
                digit = lookup[static_cast<unsigned char>(ch)];
                if (digit < 0) throw corrupt("invalid base64 character");
            }
            v = (v << 6) | static_cast<std::uint32_t>(digit);
        }
        out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
    }
    return out;
}

json shape_json(const std::vector<std::size_t>& shape) { return json(shape); }

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

json tensor_json(std::span<const double> values, const std::vector<std::size_t>& shape) {
    return {{"shape", shape_json(shape)}, {"data", base64_encode_doubles(values)}};
}

// Reads tensor `name`, checking the stored shape against `expected`.
Vec read_tensor(const json& tensors, const std::string& name, const std::vector<std::size_t>& expected) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw CorruptionError("checkpoint is missing tensor '" + name + "'");
    std::vector<std::size_t> shape;
    std::string data;
    try {
        shape = it->at("shape").get<std::vector<std::size_t>>();
        data = it->at("data").get<std::string>();
    } catch (const json::exception& e) {
        throw CorruptionError("tensor '" + name + "': " + e.what());
    }
    if (shape != expected) {
        std::ostringstream msg;
        msg << "tensor '" << name << "' has shape " << json(shape).dump() << " but the manifest implies "
            << json(expected).dump();
        throw DimensionError(msg.str());
    }
    return base64_decode_doubles(data, element_count(expected), name);
}

json parse_document(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptionError(std::string(what) + " is not valid JSON (truncated?): " + e.what());
    }
}

json embedding_list(const std::vector<Vec>& list) {
    json out = json::array();
    for (const auto& v : list) out.push_back(base64_encode_doubles(v));
    return out;
}

std::vector<Vec> read_embedding_list(const json& arr, std::size_t dim, const char* name) {
    std::vector<Vec> out;
    for (const auto& item : arr) out.push_back(base64_decode_doubles(item.get<std::string>(), dim, name));
    return out;
}

}  // namespace

std::string base64_encode_doubles(std::span<const double> values) {
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * 8);
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xff));
    }
    return base64_encode(bytes);
}

Vec base64_decode_doubles(std::string_view text, std::size_t expected_count, std::string_view tensor) {
    const auto bytes = base64_decode(text, tensor);
    if (bytes.size() % 8 != 0) {
        throw CorruptionError("tensor '" + std::string(tensor) + "': byte length is not a multiple of 8");
    }
    if (bytes.size() / 8 != expected_count) {
        throw DimensionError("tensor '" + std::string(tensor) + "' holds " + std::to_string(bytes.size() / 8) +
                             " values, expected " + std::to_string(expected_count));
    }
    Vec out(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[8 * i + k]) << (8 * k);
        std::memcpy(&out[i], &bits, sizeof bits);
    }
    return out;
}

std::string checkpoint_to_string(const DenoiserModel& model, const NoiseSchedule& sched,
                                 const CheckpointMeta& meta) {
    const auto& d = model.dims;
    json manifest = {
        {"schema_version", kCheckpointSchemaVersion},
        {"dims",
         {{"data_dim", d.data_dim},
          {"cond_dim", d.cond_dim},
          {"hidden", d.hidden},
          {"num_classes", d.num_classes},
          {"time_features", kTimeFeatures}}},
        {"schedule",
         {{"T_train", sched.train_steps}, {"beta_start", sched.beta_start}, {"beta_end", sched.beta_end}}},
        {"seed", meta.seed},
        {"training_steps", meta.training_steps},
    };
    json tensors = json::object();
    for (const auto& t : model.params.tensors()) tensors[t.name] = tensor_json(t.values, t.shape);
    json doc = {{"manifest", manifest}, {"tensors", tensors}};
    return doc.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(std::string_view text) {
    const json doc = parse_document(text, "checkpoint");
    Checkpoint ck;
    try {
        const json& manifest = doc.at("manifest");
        const int version = manifest.at("schema_version").get<int>();
        if (version != kCheckpointSchemaVersion) {
            throw SchemaError("checkpoint schema_version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointSchemaVersion) + ")");
        }
        const json& dims = manifest.at("dims");
        if (dims.at("time_features").get<std::size_t>() != kTimeFeatures) {
            throw DimensionError("checkpoint time_features does not match this build");
        }
        const json& sched = manifest.at("schedule");
        ck.schedule = make_linear_schedule(sched.at("T_train").get<int>(), sched.at("beta_start").get<double>(),
                                           sched.at("beta_end").get<double>());
        ModelDims md;
        md.data_dim = dims.at("data_dim").get<std::size_t>();
        md.cond_dim = dims.at("cond_dim").get<std::size_t>();
        md.hidden = dims.at("hidden").get<std::size_t>();
        md.num_classes = dims.at("num_classes").get<std::size_t>();
        md.train_steps = ck.schedule.train_steps;
        ck.model = zero_denoiser(md);
        ck.meta.seed = manifest.at("seed").get<std::uint64_t>();
        ck.meta.training_steps = manifest.at("training_steps").get<int>();

        const json& tensors = doc.at("tensors");
        for (auto& t : ck.model.params.tensors()) {
            const Vec values = read_tensor(tensors, t.name, t.shape);
            std::copy(values.begin(), values.end(), t.values.begin());
        }
        if (tensors.size() != ck.model.params.tensors().size()) {
            throw CorruptionError("checkpoint holds unexpected extra tensors");
        }
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("checkpoint manifest is malformed: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("checkpoint manifest holds invalid values: ") + e.what());
    }
    return ck;
}

void save_checkpoint(const DenoiserModel& model, const NoiseSchedule& sched,
                     const CheckpointMeta& meta, const std::filesystem::path& path) {
    const std::string text = checkpoint_to_string(model, sched, meta);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing checkpoint to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading checkpoint " + path.string());
    return checkpoint_from_string(ss.str());
}

std::string inversion_result_to_string(const InversionResult& r) {
    const std::size_t latent_dim = r.recon.size();
    const std::size_t cond_dim = r.cond_schedule.empty() ? 0 : r.cond_schedule.front().size();
    json traj = {
        {"direction", r.trajectory.direction == Trajectory::Direction::forward ? "forward" : "reverse"},
        {"tau_indices", r.trajectory.tau_indices},
        {"latents", embedding_list(r.trajectory.latents)},
    };
    json doc = {
        {"schema_version", kCheckpointSchemaVersion},
        {"latent_dim", latent_dim},
        {"cond_dim", cond_dim},
        {"recon", base64_encode_doubles(r.recon)},
        {"cond_schedule", embedding_list(r.cond_schedule)},
        {"per_step_loss", base64_encode_doubles(r.per_step_loss)},
        {"trajectory", traj},
    };
    return doc.dump(1) + "\n";
}

InversionResult inversion_result_from_string(std::string_view text) {
    const json doc = parse_document(text, "inversion result");
    InversionResult r;
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != kCheckpointSchemaVersion) throw SchemaError("inversion result schema_version mismatch");
        const auto latent_dim = doc.at("latent_dim").get<std::size_t>();
        const auto cond_dim = doc.at("cond_dim").get<std::size_t>();
        r.recon = base64_decode_doubles(doc.at("recon").get<std::string>(), latent_dim, "recon");
        r.cond_schedule = read_embedding_list(doc.at("cond_schedule"), cond_dim, "cond_schedule");
        r.per_step_loss = base64_decode_doubles(doc.at("per_step_loss").get<std::string>(),
                                                r.cond_schedule.size(), "per_step_loss");
        const json& traj = doc.at("trajectory");
        r.trajectory.direction = traj.at("direction").get<std::string>() == "forward" ? Trajectory::Direction::forward
                                                                                     : Trajectory::Direction::reverse;
        r.trajectory.tau_indices = traj.at("tau_indices").get<std::vector<int>>();
        r.trajectory.latents = read_embedding_list(traj.at("latents"), latent_dim, "trajectory.latents");
        r.trajectory.validate();
    } catch (const json::exception& e) {
        throw CorruptionError(std::string("inversion result is malformed: ") + e.what());
    }
    return r;
}

}  // namespace ptilab
