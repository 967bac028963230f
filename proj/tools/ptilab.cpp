// ptilab: command-line front end for data generation, training, inversion,
// editing and the three experiment runners.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ptilab/checkpoint.hpp"
#include "ptilab/config.hpp"
#include "ptilab/errors.hpp"
#include "ptilab/experiments.hpp"

namespace fs = std::filesystem;
using namespace ptilab;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string checkpoint;
};

RunConfig resolve_config(const GlobalOptions& g) {
    RunConfig cfg = g.config_path.empty() ? parse_run_config("{}") : load_run_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
    return cfg;
}

fs::path output_path(const RunConfig& cfg, const std::string& name) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
    return fs::path(cfg.output_dir) / name;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

Checkpoint load_model(const GlobalOptions& g, const RunConfig& cfg) {
    const fs::path path = g.checkpoint.empty() ? fs::path(cfg.output_dir) / "model.ckpt.json" : fs::path(g.checkpoint);
    return load_checkpoint(path);
}

std::string data_csv(const Dataset& data) {
    std::ostringstream out;
    const std::size_t d = data.empty() ? 0 : data.front().x.size();
    for (std::size_t j = 0; j < d; ++j) out << 'x' << j << ',';
    out << "label\n";
    for (const auto& s : data) {
        for (double v : s.x) out << format_number(v) << ',';
        out << s.label << '\n';
    }
    return out.str();
}

Dataset read_data_csv(const fs::path& path, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file " + path.string());
    std::string line;
    std::getline(in, line);  // header
    Dataset data;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Sample s;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != dim + 1) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) +
                              " columns");
        }
        try {
            for (std::size_t j = 0; j < dim; ++j) s.x.push_back(std::stod(cells[j]));
            s.label = std::stoi(cells[dim]);
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        data.push_back(std::move(s));
    }
    return data;
}

void cmd_gen_data(const GlobalOptions& g) {
    const RunConfig cfg = resolve_config(g);
    write_file(output_path(cfg, "data.csv"), data_csv(make_train_data(cfg)));
}

void cmd_train(const GlobalOptions& g, const std::string& data_path) {
    const RunConfig cfg = resolve_config(g);
    const ModelDims dims = model_dims(cfg);
    const Dataset data = data_path.empty() ? make_train_data(cfg) : read_data_csv(data_path, dims.data_dim);
    const NoiseSchedule sched = make_schedule(cfg);
    Rng rng = make_rng(cfg, SeedStream::training);
    const TrainResult result = train_denoiser(data, dims, sched, cfg.train, rng);

    std::ostringstream loss;
    loss << csv_header_comment(cfg) << "step,loss\n";
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
        loss << i << ',' << format_number(result.loss_curve[i]) << '\n';
    }
    write_file(output_path(cfg, "train_loss.csv"), loss.str());
    const fs::path ckpt = output_path(cfg, "model.ckpt.json");
    save_checkpoint(result.model, sched, {cfg.seed, cfg.train.steps}, ckpt);
    std::cout << "wrote " << ckpt.string() << "\n";
}

void cmd_invert(const GlobalOptions& g, const std::string& method) {
    const RunConfig cfg = resolve_config(g);
    const Checkpoint ck = load_model(g, cfg);
    const DdimSteps steps = make_ddim_steps(cfg);
    const Dataset test = make_test_set(cfg);
    const bool image = cfg.dataset.kind == DatasetConfig::Kind::shapes;
    const Embedding null_embedding = embed(ck.model, std::nullopt);

    std::ostringstream csv;
    csv << csv_header_comment(cfg) << "index,label,method,mse,psnr_db,ssim\n";
    std::string results = "[\n";
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& s = test[i];
        const Embedding c_source = embed(ck.model, s.label);
        const Embedding c_init =
            cfg.pti.init == PtiConfig::Init::source ? c_source : embed(ck.model, cfg.edit.target_class);
        Vec recon;
        if (method == "ddim") {
            recon = ddim_reconstruct(ck.model, s.x, c_source, 0.0, cfg.pti.omega, steps, ck.schedule);
        } else {
            const InversionResult r =
                method == "pti" ? prompt_tuning_inversion(ck.model, s.x, c_init, cfg.pti, steps, ck.schedule)
                                : null_text_inversion(ck.model, s.x, c_source, null_embedding, cfg.pti, steps,
                                                      ck.schedule);
            recon = r.recon;
            if (i) results += ",\n";
            results += inversion_result_to_string(r);
        }
        csv << i << ',' << s.label << ',' << method << ',' << format_number(mse(s.x, recon)) << ','
            << format_number(psnr(s.x, recon)) << ',' << (image ? format_number(ssim(s.x, recon)) : "nan") << '\n';
    }
    results += "]\n";
    write_file(output_path(cfg, "invert_" + method + ".csv"), csv.str());
    if (method != "ddim") write_file(output_path(cfg, "invert_" + method + ".json"), results);
}

Vec parse_vector(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("--input: cannot parse '" + cell + "' as a number");
        }
    }
    return out;
}

void cmd_edit(const GlobalOptions& g, std::optional<int> target, std::optional<double> eta, const std::string& input) {
    RunConfig cfg = resolve_config(g);
    if (target) cfg.edit.target_class = *target;
    if (eta) cfg.edit.eta = *eta;
    cfg.validate();
    const Checkpoint ck = load_model(g, cfg);
    const DdimSteps steps = make_ddim_steps(cfg);
    const std::vector<Vec> inputs = input.empty() ? make_edit_inputs(cfg) : std::vector<Vec>{parse_vector(input)};
    const bool mixture = cfg.dataset.kind == DatasetConfig::Kind::mixture;
    const MixtureSpec spec = mixture ? mixture_spec(cfg) : MixtureSpec{};

    std::ostringstream csv;
    csv << csv_header_comment(cfg);
    const std::size_t d = ck.model.dims.data_dim;
    csv << "index,eta,target";
    for (std::size_t j = 0; j < d; ++j) csv << ",in" << j;
    for (std::size_t j = 0; j < d; ++j) csv << ",out" << j;
    csv << ",alignment_nll,fidelity_l2\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != d) throw ConfigError("--input must have " + std::to_string(d) + " values");
        const Vec out = edit_with_pti(ck.model, inputs[i], cfg.edit, steps, ck.schedule);
        csv << i << ',' << format_number(cfg.edit.eta) << ',' << cfg.edit.target_class;
        for (double v : inputs[i]) csv << ',' << format_number(v);
        for (double v : out) csv << ',' << format_number(v);
        const double nll = mixture ? component_nll(spec, out, cfg.edit.target_class)
                                   : std::numeric_limits<double>::quiet_NaN();
        csv << ',' << format_number(nll) << ',' << format_number(std::sqrt(squared_distance(inputs[i], out))) << '\n';
    }
    write_file(output_path(cfg, "edit.csv"), csv.str());
}

void cmd_grid(const GlobalOptions& g) {
    const RunConfig cfg = resolve_config(g);
    const Checkpoint ck = load_model(g, cfg);
    const auto cells = run_grid_experiment(ck.model, ck.schedule, cfg, cfg.experiments.grid_omegas_enc,
                                           cfg.experiments.grid_omegas_dec);
    write_file(output_path(cfg, "grid.csv"), grid_csv(cfg, cells));
}

void cmd_bench(const GlobalOptions& g) {
    const RunConfig cfg = resolve_config(g);
    const Checkpoint ck = load_model(g, cfg);
    const auto rows = run_inversion_bench(ck.model, ck.schedule, cfg, cfg.experiments.bench_methods,
                                          cfg.experiments.bench_iterations, cfg.experiments.bench_betas);
    write_file(output_path(cfg, "bench.csv"), bench_csv(cfg, rows));
}

void cmd_tradeoff(const GlobalOptions& g) {
    const RunConfig cfg = resolve_config(g);
    const Checkpoint ck = load_model(g, cfg);
    const auto rows = run_tradeoff(ck.model, ck.schedule, cfg, cfg.experiments.tradeoff_etas);
    write_file(output_path(cfg, "tradeoff.csv"), tradeoff_csv(cfg, rows));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt tuning inversion lab: train, invert and edit with a toy diffusion model"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    app.add_option("--config", g.config_path, "Run configuration (JSON)");
    auto* seed_opt = app.add_option("--seed", seed, "Root seed (overrides the config)");
    app.add_option("--out", g.out_dir, "Output directory (overrides the config)");

    auto* gen = app.add_subcommand("gen-data", "Write the training samples as CSV");
    auto* train = app.add_subcommand("train", "Train the denoiser and write a checkpoint");
    std::string data_path;
    train->add_option("--data", data_path, "Training CSV (default: generate from the config)");

    auto* invert = app.add_subcommand("invert", "Reconstruct the test set with one inversion method");
    std::string method;
    invert->add_option("--method", method, "ddim | nti | pti")->required()->check(CLI::IsMember({"ddim", "nti", "pti"}));

    auto* edit = app.add_subcommand("edit", "Edit source-class inputs toward a target class");
    std::optional<int> target;
    std::optional<double> eta;
    std::string input;
    edit->add_option("--target", target, "Target class id");
    edit->add_option("--eta", eta, "Interpolation ratio in [0, 1]");
    edit->add_option("--input", input, "Single comma-separated input vector");

    auto* grid = app.add_subcommand("grid", "Guidance-mismatch reconstruction grid");
    auto* bench = app.add_subcommand("bench", "DDIM / NTI / PTI reconstruction benchmark");
    auto* tradeoff = app.add_subcommand("tradeoff", "Editability / fidelity trade-off sweep");
    for (auto* sub : {invert, edit, grid, bench, tradeoff}) {
        sub->add_option("--checkpoint", g.checkpoint, "Checkpoint (default: <out>/model.ckpt.json)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    if (seed_opt->count()) g.seed = seed;

    try {
        if (gen->parsed()) cmd_gen_data(g);
        if (train->parsed()) cmd_train(g, data_path);
        if (invert->parsed()) cmd_invert(g, method);
        if (edit->parsed()) cmd_edit(g, target, eta, input);
        if (grid->parsed()) cmd_grid(g);
        if (bench->parsed()) cmd_bench(g);
        if (tradeoff->parsed()) cmd_tradeoff(g);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
