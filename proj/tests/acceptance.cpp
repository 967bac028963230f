// Acceptance suite: trains the default model once and checks every
// acceptance criterion, printing one PASS/FAIL line per criterion.
//
// usage: ptilab_acceptance <path-to-ptilab-cli> <work-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ptilab/checkpoint.hpp"
#include "ptilab/config.hpp"
#include "ptilab/errors.hpp"
#include "ptilab/experiments.hpp"
#include "reference_model.hpp"
#include "support.hpp"

using namespace ptilab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kGradTol = 1e-5;
constexpr double kGradRuntimeSec = 60.0;
constexpr double kInverseTol = 1e-12;
constexpr double kRoundTripMse = 1e-2;
constexpr double kRoundTripRatio = 10.0;
constexpr double kGridTie = 0.01;
constexpr double kGridRuntimeSec = 300.0;
constexpr double kPtiVsDdim = 0.2;
constexpr int kPtiBeatsNtiMin = 9;
constexpr double kSpearmanMin = 0.9;
constexpr double kDominanceMargin = 0.01;
constexpr double kBudgetSec = 30.0 * 60.0;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " (" << detail << ")"
              << std::endl;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void gradient_correctness() {
    const auto start = Clock::now();
    test::Gen gen(20241);
    const ModelDims full{};
    const ModelDims micro{2, 3, 4, 3, 1000};
    double worst_c = 0.0, worst_p = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        {
            const DenoiserModel model = test::random_model(full, 7000 + trial);
            const Vec z = gen.normal(2, 1.5);
            const int t = gen.integer(1, 1000);
            const Vec c = gen.normal(16);
            const Vec up = gen.normal(2);
            const auto fwd = eps_forward(model, z, t, c);
            const Vec analytic = grad_wrt_embedding(model, fwd.cache, up);
            const Vec numeric = finite_diff_grad(
                [&](std::span<const double> cc) { return dot(up, eps_forward(model, z, t, cc).eps); }, c);
            worst_c = std::max(worst_c, test::relative_error(analytic, numeric));
        }
        {
            const DenoiserModel base = test::random_model(micro, 9000 + trial);
            const Vec z = gen.normal(2, 1.5);
            const int t = gen.integer(1, 1000);
            const int k = gen.integer(0, 2);
            const Vec up = gen.normal(2);
            const auto fwd = eps_forward(base, z, t, embed(base, k), embed_row(base, k));
            const Vec analytic = test::flatten_params(grad_wrt_params(base, fwd.cache, up));
            DenoiserModel probe = base;
            const Vec numeric = finite_diff_grad(
                [&](std::span<const double> theta) {
                    test::unflatten_params(Vec(theta.begin(), theta.end()), probe.params);
                    return dot(up, eps_forward(probe, z, t, embed(probe, k)).eps);
                },
                test::flatten_params(base.params));
            worst_p = std::max(worst_p, test::relative_error(analytic, numeric));
        }
    }
    const double secs = seconds_since(start);
    report(1, worst_c < kGradTol && worst_p < kGradTol && secs < kGradRuntimeSec, "gradient correctness",
           "max rel err grad_c " + fmt(worst_c) + ", params " + fmt(worst_p) + ", 100 configs, " + fmt(secs) + " s");
}

// ---------------------------------------------------------------- criterion 2
void exact_inverse(const NoiseSchedule& sched) {
    const DdimSteps steps = ddim_timesteps(sched.train_steps, 50, 1.0);
    test::Gen gen(5150);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const DenoiserModel model = test::constant_model(ModelDims{}, gen.normal(2));
        const Vec c = embed(model, 0);
        for (int i = 1; i <= steps.sampler_steps; ++i) {
            const int lo = steps.taus[i - 1], hi = steps.taus[i];
            const Vec z = gen.normal(2);
            const Vec up = ddim_invert_step(z, lo, hi, cfg_eps(model, z, lo, c, 0.0), sched);
            const Vec back = ddim_step(up, hi, lo, cfg_eps(model, up, hi, c, 0.0), sched);
            const Vec down = ddim_step(z, hi, lo, cfg_eps(model, z, hi, c, 0.0), sched);
            const Vec again = ddim_invert_step(down, lo, hi, cfg_eps(model, down, lo, c, 0.0), sched);
            for (std::size_t d = 0; d < z.size(); ++d) {
                worst = std::max({worst, std::abs(back[d] - z[d]), std::abs(again[d] - z[d])});
            }
        }
    }
    report(2, worst < kInverseTol, "exact-inverse algebra", "max abs err " + fmt(worst) + " over 50 tau pairs x 10 denoisers");
}

// ------------------------------------------------------------- criteria 3, 4
void guidance_grid(const DenoiserModel& model, const NoiseSchedule& sched, const RunConfig& cfg) {
    const auto start = Clock::now();
    const std::vector<double> omegas{0.0, 1.0, 2.5, 5.0};
    const auto cells = run_grid_experiment(model, sched, cfg, omegas, {0.0, 1.0, 2.5, 5.0, 7.5});
    const double secs = seconds_since(start);
    auto at = [&](double we, double wd) {
        for (const auto& c : cells) {
            if (c.omega_enc == we && c.omega_dec == wd) return c.stats.mse;
        }
        throw Error("grid cell missing");
    };

    const double matched = at(0, 0), mismatched = at(0, 7.5);
    report(3, matched < kRoundTripMse && mismatched >= kRoundTripRatio * matched, "omega=0 round trip",
           "MSE " + fmt(matched) + " vs (0, 7.5) MSE " + fmt(mismatched) + ", ratio " + fmt(mismatched / matched) +
               ", n=" + std::to_string(cells.front().stats.count));

    bool rows_ok = true;
    std::string detail;
    for (double we : {0.0, 1.0, 2.5}) {
        double row_min = INFINITY;
        for (double wd : {0.0, 1.0, 2.5}) row_min = std::min(row_min, at(we, wd));
        const bool ok = at(we, we) <= (1.0 + kGridTie) * row_min;
        rows_ok = rows_ok && ok;
        if (!ok) detail += "row " + fmt(we) + " minimum off-diagonal; ";
    }
    bool mono = true;
    std::string diag = "diagonal";
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        diag += " " + fmt(at(omegas[i], omegas[i]));
        if (i > 0 && at(omegas[i], omegas[i]) < at(omegas[i - 1], omegas[i - 1])) mono = false;
    }
    if (!mono) detail += "diagonal decreases somewhere; ";
    report(4, rows_ok && mono && secs < kGridRuntimeSec, "guidance grid pattern",
           detail + diag + ", " + fmt(secs) + " s");
}

// ------------------------------------------------------------- criteria 5, 6
void inversion_bench(const DenoiserModel& model, const NoiseSchedule& sched, const RunConfig& cfg) {
    const auto rows = run_inversion_bench(model, sched, cfg, {"ddim", "nti", "pti"}, {1, 2, 3, 4, 5}, {0.01, 0.1});
    auto find = [&](const std::string& method, int n, double beta) {
        for (const auto& r : rows) {
            if (r.method == method && (method == "ddim" || (r.iterations == n && r.beta == beta))) return r.stats.mse;
        }
        throw Error("bench row missing");
    };
    const double ddim = find("ddim", 0, 0), pti = find("pti", 1, 0.1);
    report(5, pti <= kPtiVsDdim * ddim, "PTI vs plain DDIM reconstruction at omega=7.5",
           "PTI MSE " + fmt(pti) + ", DDIM MSE " + fmt(ddim) + ", ratio " + fmt(pti / ddim));

    int wins = 0;
    std::string detail;
    for (double beta : {0.01, 0.1}) {
        for (int n = 1; n <= 5; ++n) {
            const double p = find("pti", n, beta), q = find("nti", n, beta);
            wins += p <= q;
            if (p > q) detail += "N=" + std::to_string(n) + ",beta=" + fmt(beta) + ": PTI " + fmt(p) + " > NTI " + fmt(q) + "; ";
        }
    }
    report(6, wins >= kPtiBeatsNtiMin, "PTI error <= NTI error", std::to_string(wins) + "/10 settings; " + detail);
}

// ---------------------------------------------------------------- criterion 7
void editing_equivalences(const DenoiserModel& model, const NoiseSchedule& sched, const RunConfig& cfg) {
    const DdimSteps steps = make_ddim_steps(cfg);
    const auto inputs = make_edit_inputs(cfg);
    int checked = 0, exact = 0;
    for (std::size_t i = 0; i < inputs.size(); i += 4) {
        const Vec& x = inputs[i];
        EditConfig e = cfg.edit;
        PtiConfig pti = e.pti;
        pti.omega = e.omega;
        const PtiResult tuned =
            prompt_tuning_inversion(model, x, embed(model, e.target_class), pti, steps, sched);
        const Vec ddim = edit_ddim(model, x, e.target_class, e.omega, steps, sched);
        e.eta = 0.0;
        exact += edit_with_pti(model, x, e, steps, sched) == tuned.recon;
        e.eta = 1.0;
        exact += edit_with_pti(model, x, e, steps, sched) == ddim;
        exact += edit_latent_interp(model, x, e.target_class, 1.0, e.omega, steps, sched) == ddim;
        exact += edit_latent_interp(model, x, e.target_class, 0.0, e.omega, steps, sched) == x;
        checked += 4;
    }
    report(7, exact == checked, "editing equivalences (bit-exact)",
           std::to_string(exact) + "/" + std::to_string(checked) + " identities hold on the trained model");
}

// ------------------------------------------------------------- criteria 8, 9
void tradeoff(const DenoiserModel& model, const NoiseSchedule& sched, const RunConfig& cfg) {
    const std::vector<double> etas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const auto rows = run_tradeoff(model, sched, cfg, etas);
    Vec fid, nll;
    TradeoffPoint pti_09{}, ddim{};
    for (const auto& r : rows) {
        if (r.method == EditMethod::pti && r.beta == cfg.edit.pti.beta) {
            fid.push_back(r.point.fidelity_l2);
            nll.push_back(r.point.alignment_nll);
            if (r.point.eta == 0.9) pti_09 = r.point;
        }
        if (r.method == EditMethod::ddim_edit) ddim = r.point;
    }
    const double rho_fid = spearman(etas, fid), rho_nll = spearman(etas, nll);
    std::string curve = "nll by eta:";
    for (double v : nll) curve += " " + fmt(v);
    report(8, rho_fid >= kSpearmanMin && rho_nll <= -kSpearmanMin, "trade-off monotonicity",
           "spearman fidelity " + fmt(rho_fid) + ", alignment " + fmt(rho_nll) + "; " + curve);

    const bool no_worse = pti_09.alignment_nll <= ddim.alignment_nll && pti_09.fidelity_l2 <= ddim.fidelity_l2;
    const bool strictly = pti_09.alignment_nll < (1.0 - kDominanceMargin) * ddim.alignment_nll ||
                          pti_09.fidelity_l2 < (1.0 - kDominanceMargin) * ddim.fidelity_l2;
    report(9, no_worse && strictly, "Pareto dominance at eta=0.9",
           "PTI (nll " + fmt(pti_09.alignment_nll) + ", L2 " + fmt(pti_09.fidelity_l2) + ") vs DDIM-Edit (nll " +
               fmt(ddim.alignment_nll) + ", L2 " + fmt(ddim.fidelity_l2) + ")");
}

// --------------------------------------------------------------- criterion 10
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void cli_determinism(const std::string& cli, const fs::path& work) {
    const fs::path root = work / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config = root / "config.json";
    std::ofstream(config) << R"({
  "seed": 11,
  "dataset": {"train_size": 500, "test_size": 8},
  "model": {"hidden": 32, "cond_dim": 8},
  "train": {"steps": 300, "batch": 32},
  "ddim": {"steps": 20},
  "experiments": {"grid_omegas_enc": [0, 2.5], "grid_omegas_dec": [0, 2.5, 7.5],
                  "bench_iterations": [1, 3], "tradeoff_etas": [0.2, 0.9]}
}
)";
    const std::vector<std::string> commands{
        "gen-data", "train", "invert --method ddim", "invert --method nti", "invert --method pti",
        "edit --target 2 --eta 0.7", "grid", "bench", "tradeoff"};
    bool ok = true;
    std::string detail;
    for (const char* run : {"a", "b"}) {
        for (const auto& cmd : commands) {
            const std::string line = "\"" + cli + "\" --config \"" + config.string() + "\" --out \"" +
                                     (root / run).string() + "\" " + cmd + " > /dev/null";
            const int rc = std::system(line.c_str());
            if (rc != 0) {
                ok = false;
                detail += "'" + cmd + "' exited with " + std::to_string(rc) + "; ";
            }
        }
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        const fs::path other = root / "b" / entry.path().filename();
        ++files;
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            ok = false;
            detail += entry.path().filename().string() + " differs; ";
        }
    }
    const int expected_files = 12;
    if (files != expected_files) {
        ok = false;
        detail += "expected " + std::to_string(expected_files) + " output files, got " + std::to_string(files) + "; ";
    }
    report(10, ok, "CLI determinism", detail + std::to_string(files) + " files from 9 subcommand runs compared byte-for-byte");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: ptilab_acceptance <ptilab-cli> <work-dir>\n";
        return 2;
    }
    const auto start = Clock::now();
    const std::string cli = argv[1];
    const fs::path work = argv[2];
    fs::create_directories(work);

    try {
        RunConfig cfg = parse_run_config("{}");
        const NoiseSchedule sched = make_schedule(cfg);

        gradient_correctness();
        exact_inverse(sched);

        const auto train_start = Clock::now();
        Rng rng = make_rng(cfg, SeedStream::training);
        const TrainResult trained = train_denoiser(make_train_data(cfg), model_dims(cfg), sched, cfg.train, rng);
        save_checkpoint(trained.model, sched, {cfg.seed, cfg.train.steps}, work / "model.ckpt.json");
        test::write_loss_curve(trained.loss_curve, work / "train_loss.txt");
        std::cout << "trained default model: " << cfg.train.steps << " steps in " << fmt(seconds_since(train_start))
                  << " s" << std::endl;

        guidance_grid(trained.model, sched, cfg);
        inversion_bench(trained.model, sched, cfg);
        editing_equivalences(trained.model, sched, cfg);
        tradeoff(trained.model, sched, cfg);
        cli_determinism(cli, work);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }

    const double total = seconds_since(start);
    report(11, total < kBudgetSec, "desk-scale budget", "full suite " + fmt(total) + " s on one core");
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
