#include "ptilab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

using nlohmann::json;

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t> ||
                          std::is_same_v<T, int>) {
                if (!it->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
                if constexpr (!std::is_same_v<T, int>) {
                    if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<long long>() < 0) {
                        throw ConfigError(where(key) + ": expected a non-negative integer");
                    }
                }
            } else if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ConfigError(where(key) + ": expected a number");
            }
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    StrictObject child(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        static const json empty = json::object();
        return StrictObject(it == j_.end() ? empty : *it, where(key));
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + where(item.key().c_str()) + "'");
        }
    }

private:
    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

PtiConfig::Init parse_init(const std::string& s) {
    if (s == "source") return PtiConfig::Init::source;
    if (s == "target") return PtiConfig::Init::target;
    throw ConfigError("pti.init must be 'source' or 'target', got '" + s + "'");
}

const char* init_name(PtiConfig::Init init) {
    return init == PtiConfig::Init::source ? "source" : "target";
}

void read_pti(StrictObject obj, PtiConfig& pti) {
    obj.read("omega", pti.omega);
    obj.read("beta", pti.beta);
    obj.read("iterations", pti.iterations);
    std::string init = init_name(pti.init);
    obj.read("init", init);
    pti.init = parse_init(init);
    obj.finish();
}

json pti_json(const PtiConfig& pti) {
    return {{"omega", pti.omega}, {"beta", pti.beta}, {"iterations", pti.iterations},
            {"init", init_name(pti.init)}};
}

json to_json(const RunConfig& c) {
    const auto& d = c.dataset;
    const auto& x = c.experiments;
    return {
        {"seed", c.seed},
        {"dataset",
         {{"kind", d.kind == DatasetConfig::Kind::mixture ? "mixture" : "shapes"},
          {"num_classes", d.num_classes},
          {"dim", d.dim},
          {"sigma", d.sigma},
          {"radius", d.radius},
          {"jitter", d.jitter},
          {"train_size", d.train_size},
          {"test_size", d.test_size}}},
        {"schedule",
         {{"T_train", c.schedule.train_steps},
          {"beta_start", c.schedule.beta_start},
          {"beta_end", c.schedule.beta_end}}},
        {"ddim", {{"steps", c.ddim.steps}, {"ratio", c.ddim.ratio}}},
        {"model", {{"hidden", c.model.hidden}, {"cond_dim", c.model.cond_dim}}},
        {"train",
         {{"steps", c.train.steps},
          {"batch", c.train.batch},
          {"lr", c.train.lr},
          {"adam_beta1", c.train.adam_beta1},
          {"adam_beta2", c.train.adam_beta2},
          {"adam_eps", c.train.adam_eps},
          {"p_uncond", c.train.p_uncond}}},
        {"pti", pti_json(c.pti)},
        {"edit",
         {{"eta", c.edit.eta},
          {"omega", c.edit.omega},
          {"source_class", c.edit.source_class},
          {"target_class", c.edit.target_class},
          {"pti", pti_json(c.edit.pti)}}},
        {"experiments",
         {{"grid_omegas_enc", x.grid_omegas_enc},
          {"grid_omegas_dec", x.grid_omegas_dec},
          {"bench_methods", x.bench_methods},
          {"bench_iterations", x.bench_iterations},
          {"bench_betas", x.bench_betas},
          {"tradeoff_etas", x.tradeoff_etas},
          {"tradeoff_betas", x.tradeoff_betas}}},
        {"output_dir", c.output_dir},
    };
}

template <typename T>
void read_list(StrictObject& obj, const char* key, std::vector<T>& out) {
    obj.read(key, out);
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    StrictObject top(root, "");
    top.read("seed", cfg.seed);
    top.read("output_dir", cfg.output_dir);
    {
        auto d = top.child("dataset");
        std::string kind = cfg.dataset.kind == DatasetConfig::Kind::mixture ? "mixture" : "shapes";
        d.read("kind", kind);
        if (kind == "mixture") {
            cfg.dataset.kind = DatasetConfig::Kind::mixture;
        } else if (kind == "shapes") {
            cfg.dataset.kind = DatasetConfig::Kind::shapes;
        } else {
            throw ConfigError("dataset.kind must be 'mixture' or 'shapes', got '" + kind + "'");
        }
        d.read("num_classes", cfg.dataset.num_classes);
        d.read("dim", cfg.dataset.dim);
        d.read("sigma", cfg.dataset.sigma);
        d.read("radius", cfg.dataset.radius);
        d.read("jitter", cfg.dataset.jitter);
        d.read("train_size", cfg.dataset.train_size);
        d.read("test_size", cfg.dataset.test_size);
        d.finish();
    }
    {
        auto s = top.child("schedule");
        s.read("T_train", cfg.schedule.train_steps);
        s.read("beta_start", cfg.schedule.beta_start);
        s.read("beta_end", cfg.schedule.beta_end);
        s.finish();
    }
    {
        auto s = top.child("ddim");
        s.read("steps", cfg.ddim.steps);
        s.read("ratio", cfg.ddim.ratio);
        s.finish();
    }
    {
        auto m = top.child("model");
        m.read("hidden", cfg.model.hidden);
        m.read("cond_dim", cfg.model.cond_dim);
        m.finish();
    }
    {
        auto t = top.child("train");
        t.read("steps", cfg.train.steps);
        t.read("batch", cfg.train.batch);
        t.read("lr", cfg.train.lr);
        t.read("adam_beta1", cfg.train.adam_beta1);
        t.read("adam_beta2", cfg.train.adam_beta2);
        t.read("adam_eps", cfg.train.adam_eps);
        t.read("p_uncond", cfg.train.p_uncond);
        t.finish();
    }
    read_pti(top.child("pti"), cfg.pti);
    {
        auto e = top.child("edit");
        e.read("eta", cfg.edit.eta);
        e.read("omega", cfg.edit.omega);
        e.read("source_class", cfg.edit.source_class);
        e.read("target_class", cfg.edit.target_class);
        read_pti(e.child("pti"), cfg.edit.pti);
        e.finish();
    }
    {
        auto x = top.child("experiments");
        read_list(x, "grid_omegas_enc", cfg.experiments.grid_omegas_enc);
        read_list(x, "grid_omegas_dec", cfg.experiments.grid_omegas_dec);
        read_list(x, "bench_methods", cfg.experiments.bench_methods);
        read_list(x, "bench_iterations", cfg.experiments.bench_iterations);
        read_list(x, "bench_betas", cfg.experiments.bench_betas);
        read_list(x, "tradeoff_etas", cfg.experiments.tradeoff_etas);
        read_list(x, "tradeoff_betas", cfg.experiments.tradeoff_betas);
        x.finish();
    }
    top.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string to_json_string(const RunConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t config_hash(const RunConfig& cfg) {
    json j = to_json(cfg);
    j.erase("output_dir");
    const std::string s = j.dump();
    return fnv1a64({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

void RunConfig::validate() const {
    if (dataset.kind == DatasetConfig::Kind::mixture) {
        mixture_spec(*this);
    } else {
        shape_spec(*this).validate();
    }
    if (dataset.train_size < 1) throw ConfigError("dataset.train_size must be >= 1");
    if (dataset.test_size < 1) throw ConfigError("dataset.test_size must be >= 1");
    make_schedule(*this);
    make_ddim_steps(*this);
    model_dims(*this).validate();
    train.validate();
    pti.validate();
    if (!(pti.omega > 1.0)) throw ConfigError("pti.omega must be > 1");
    if (!(pti.beta > 0.0)) throw ConfigError("pti.beta must be > 0");
    edit.validate();
    if (!(edit.pti.beta > 0.0)) throw ConfigError("edit.pti.beta must be > 0");
    const auto k = static_cast<int>(model_dims(*this).num_classes);
    if (edit.source_class < 0 || edit.source_class >= k) throw ConfigError("edit.source_class out of range");
    if (edit.target_class < 0 || edit.target_class >= k) throw ConfigError("edit.target_class out of range");
    for (const auto& m : experiments.bench_methods) {
        if (m != "ddim" && m != "nti" && m != "pti") throw ConfigError("unknown bench method '" + m + "'");
    }
    for (int n : experiments.bench_iterations) {
        if (n < 1) throw ConfigError("bench iterations N must be >= 1");
    }
    for (double b : experiments.bench_betas) {
        if (!(b > 0.0)) throw ConfigError("bench learning rates must be > 0");
    }
    for (double b : experiments.tradeoff_betas) {
        if (!(b > 0.0)) throw ConfigError("tradeoff learning rates must be > 0");
    }
    for (double e : experiments.tradeoff_etas) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("tradeoff etas must lie in [0, 1]");
    }
    for (double w : experiments.grid_omegas_enc) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("grid guidance scales must be finite and >= 0");
    }
    for (double w : experiments.grid_omegas_dec) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("grid guidance scales must be finite and >= 0");
    }
}

Rng make_rng(const RunConfig& cfg, SeedStream stream) {
    return Rng::stream(cfg.seed, static_cast<std::uint64_t>(stream));
}

MixtureSpec mixture_spec(const RunConfig& cfg) {
    return make_circle_mixture(cfg.dataset.num_classes, cfg.dataset.dim, cfg.dataset.sigma,
                               cfg.dataset.radius);
}

ShapeSpec shape_spec(const RunConfig& cfg) { return ShapeSpec{cfg.dataset.jitter}; }

ModelDims model_dims(const RunConfig& cfg) {
    ModelDims dims;
    const bool shapes = cfg.dataset.kind == DatasetConfig::Kind::shapes;
    dims.data_dim = shapes ? kShapePixels : cfg.dataset.dim;
    dims.num_classes = shapes ? kShapeClasses : cfg.dataset.num_classes;
    dims.cond_dim = cfg.model.cond_dim;
    dims.hidden = cfg.model.hidden;
    dims.train_steps = cfg.schedule.train_steps;
    return dims;
}

NoiseSchedule make_schedule(const RunConfig& cfg) {
    return make_linear_schedule(cfg.schedule.train_steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
}

DdimSteps make_ddim_steps(const RunConfig& cfg) {
    return ddim_timesteps(cfg.schedule.train_steps, cfg.ddim.steps, cfg.ddim.ratio);
}

Dataset make_train_data(const RunConfig& cfg) {
    Rng rng = make_rng(cfg, SeedStream::train_data);
    if (cfg.dataset.kind == DatasetConfig::Kind::shapes) {
        return sample_shapes(shape_spec(cfg), cfg.dataset.train_size, rng);
    }
    return sample_mixture(mixture_spec(cfg), cfg.dataset.train_size, rng);
}

Dataset make_test_set(const RunConfig& cfg) {
    Rng rng = make_rng(cfg, SeedStream::test_set);
    if (cfg.dataset.kind == DatasetConfig::Kind::shapes) {
        return sample_shapes(shape_spec(cfg), cfg.dataset.test_size, rng);
    }
    return sample_mixture(mixture_spec(cfg), cfg.dataset.test_size, rng);
}

std::vector<Vec> make_edit_inputs(const RunConfig& cfg) {
    Rng rng = make_rng(cfg, SeedStream::edit_inputs);
    std::vector<Vec> out;
    if (cfg.dataset.kind == DatasetConfig::Kind::shapes) {
        const ShapeSpec spec = shape_spec(cfg);
        for (std::size_t i = 0; i < cfg.dataset.test_size; ++i) {
            out.push_back(render_shape(spec, cfg.edit.source_class, rng));
        }
        return out;
    }
    for (auto& s : sample_mixture_class(mixture_spec(cfg), cfg.edit.source_class, cfg.dataset.test_size, rng)) {
        out.push_back(std::move(s.x));
    }
    return out;
}

}  // namespace ptilab
