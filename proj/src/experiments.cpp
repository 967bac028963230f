#include "ptilab/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ptilab/checkpoint.hpp"
#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

bool is_image(const RunConfig& cfg) { return cfg.dataset.kind == DatasetConfig::Kind::shapes; }

class ReconAccumulator {
public:
    explicit ReconAccumulator(bool image) : image_(image) {}

    void add(std::span<const double> truth, std::span<const double> recon) {
        mse_ += mse(truth, recon);
        if (image_) ssim_ += ssim(truth, recon);
        ++count_;
    }

    ReconStats stats() const {
        ReconStats s;
        s.count = count_;
        s.mse = mse_ / static_cast<double>(count_);
        s.psnr_db = psnr_from_mse(s.mse);
        s.ssim = image_ ? ssim_ / static_cast<double>(count_) : std::numeric_limits<double>::quiet_NaN();
        return s;
    }

private:
    bool image_;
    double mse_ = 0.0;
    double ssim_ = 0.0;
    std::size_t count_ = 0;
};

void check_model(const DenoiserModel& model, const RunConfig& cfg) {
    const ModelDims want = model_dims(cfg);
    const ModelDims& have = model.dims;
    if (have.data_dim != want.data_dim || have.num_classes != want.num_classes ||
        have.train_steps != want.train_steps) {
        throw ConfigError("checkpoint does not match the configured dataset/schedule");
    }
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<GridCell> run_grid_experiment(const DenoiserModel& model, const NoiseSchedule& sched,
                                          const RunConfig& cfg, const std::vector<double>& omegas_enc,
                                          const std::vector<double>& omegas_dec) {
    check_model(model, cfg);
    if (omegas_enc.empty() || omegas_dec.empty()) throw ConfigError("grid needs at least one guidance scale per axis");
    const DdimSteps steps = make_ddim_steps(cfg);
    const Dataset test = make_test_set(cfg);
    std::vector<GridCell> cells;
    for (double we : omegas_enc) {
        // One inversion per (input, omega_enc), shared by the whole row.
        std::vector<Trajectory> inverted;
        for (const auto& s : test) {
            inverted.push_back(invert_trajectory(model, encode(s.x), embed(model, s.label), we, steps, sched));
        }
        for (double wd : omegas_dec) {
            ReconAccumulator acc(is_image(cfg));
            for (std::size_t i = 0; i < test.size(); ++i) {
                const std::vector<Embedding> conds(static_cast<std::size_t>(steps.start_index),
                                                   embed(model, test[i].label));
                const Trajectory out =
                    sample_trajectory(model, inverted[i].latents.back(), conds, wd, steps, sched);
                acc.add(test[i].x, decode(out.latents.back()));
            }
            cells.push_back({we, wd, acc.stats()});
        }
    }
    return cells;
}

std::vector<BenchRow> run_inversion_bench(const DenoiserModel& model, const NoiseSchedule& sched,
                                          const RunConfig& cfg, const std::vector<std::string>& methods,
                                          const std::vector<int>& iterations,
                                          const std::vector<double>& betas) {
    check_model(model, cfg);
    for (int n : iterations) {
        if (n < 1) throw ConfigError("bench: iterations N must be >= 1");
    }
    for (double b : betas) {
        if (!(b > 0.0)) throw ConfigError("bench: learning rate beta must be > 0");
    }
    const DdimSteps steps = make_ddim_steps(cfg);
    const Dataset test = make_test_set(cfg);
    const double omega = cfg.pti.omega;
    const Embedding null_embedding = embed(model, std::nullopt);

    std::vector<Trajectory> inverted;
    for (const auto& s : test) {
        inverted.push_back(invert_trajectory(model, encode(s.x), null_embedding, 0.0, steps, sched));
    }

    std::vector<BenchRow> rows;
    for (const auto& method : methods) {
        if (method == "ddim") {
            ReconAccumulator acc(is_image(cfg));
            for (std::size_t i = 0; i < test.size(); ++i) {
                const std::vector<Embedding> conds(static_cast<std::size_t>(steps.start_index),
                                                   embed(model, test[i].label));
                const Trajectory out = sample_trajectory(model, inverted[i].latents.back(), conds, omega, steps, sched);
                acc.add(test[i].x, decode(out.latents.back()));
            }
            rows.push_back({method, 0, 0.0, omega, acc.stats()});
            continue;
        }
        if (method != "nti" && method != "pti") throw ConfigError("unknown bench method '" + method + "'");
        for (double beta : betas) {
            for (int n : iterations) {
                PtiConfig pc = cfg.pti;
                pc.beta = beta;
                pc.iterations = n;
                ReconAccumulator acc(is_image(cfg));
                for (std::size_t i = 0; i < test.size(); ++i) {
                    const Embedding c = embed(model, test[i].label);
                    const InversionResult r =
                        method == "pti" ? prompt_tuning_inversion(model, inverted[i], c, pc, steps, sched)
                                        : null_text_inversion(model, inverted[i], c, null_embedding, pc, steps, sched);
                    acc.add(test[i].x, r.recon);
                }
                rows.push_back({method, n, beta, omega, acc.stats()});
            }
        }
    }
    return rows;
}

std::vector<TradeoffRow> run_tradeoff(const DenoiserModel& model, const NoiseSchedule& sched,
                                      const RunConfig& cfg, const std::vector<double>& etas) {
    check_model(model, cfg);
    if (cfg.dataset.kind != DatasetConfig::Kind::mixture) {
        throw ConfigError("tradeoff needs the mixture dataset (alignment uses its exact density)");
    }
    const DdimSteps steps = make_ddim_steps(cfg);
    const MixtureSpec spec = mixture_spec(cfg);
    const std::vector<Vec> inputs = make_edit_inputs(cfg);

    std::vector<TradeoffRow> rows;
    auto append = [&](EditMethod method, const EditConfig& ec) {
        for (const auto& p : tradeoff_sweep(model, spec, inputs, etas, ec, method, steps, sched)) {
            rows.push_back({method, method == EditMethod::pti ? ec.pti.beta : 0.0, p});
        }
    };
    append(EditMethod::pti, cfg.edit);
    append(EditMethod::ddim_edit, cfg.edit);
    append(EditMethod::latent_interp, cfg.edit);
    for (double beta : cfg.experiments.tradeoff_betas) {
        EditConfig ec = cfg.edit;
        ec.pti.beta = beta;
        append(EditMethod::pti, ec);
    }
    return rows;
}

std::string csv_header_comment(const RunConfig& cfg) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "0x%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    std::ostringstream out;
    out << "# seed=" << cfg.seed << ",schema_version=" << kCheckpointSchemaVersion << ",config_hash=" << hash
        << "\n";
    return out.str();
}

std::string grid_csv(const RunConfig& cfg, const std::vector<GridCell>& cells) {
    std::ostringstream out;
    out << csv_header_comment(cfg) << "omega_enc,omega_dec,mse,psnr_db,ssim\n";
    for (const auto& c : cells) {
        out << format_number(c.omega_enc) << ',' << format_number(c.omega_dec) << ',' << format_number(c.stats.mse)
            << ',' << format_number(c.stats.psnr_db) << ',' << format_number(c.stats.ssim) << '\n';
    }
    return out.str();
}

std::string bench_csv(const RunConfig& cfg, const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << csv_header_comment(cfg) << "method,N,beta,omega,mse,psnr_db,ssim\n";
    for (const auto& r : rows) {
        out << r.method << ',';
        if (r.method == "ddim") {
            out << ",,";
        } else {
            out << r.iterations << ',' << format_number(r.beta) << ',';
        }
        out << format_number(r.omega) << ',' << format_number(r.stats.mse) << ',' << format_number(r.stats.psnr_db)
            << ',' << format_number(r.stats.ssim) << '\n';
    }
    return out.str();
}

std::string tradeoff_csv(const RunConfig& cfg, const std::vector<TradeoffRow>& rows) {
    std::ostringstream out;
    out << csv_header_comment(cfg) << "method,beta,eta,alignment_nll,fidelity_l2,mse,psnr_db,ssim\n";
    for (const auto& r : rows) {
        out << edit_method_name(r.method) << ',' << (r.method == EditMethod::pti ? format_number(r.beta) : "") << ','
            << format_number(r.point.eta) << ',' << format_number(r.point.alignment_nll) << ','
            << format_number(r.point.fidelity_l2) << ',' << format_number(r.point.mse) << ','
            << format_number(r.point.psnr_db) << ",nan\n";
    }
    return out.str();
}

}  // namespace ptilab
