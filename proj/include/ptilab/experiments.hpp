#pragma once

#include <string>
#include <vector>

#include "ptilab/config.hpp"
#include "ptilab/metrics.hpp"

namespace ptilab {

/// Reconstruction quality aggregated over the test set.
struct ReconStats {
    double mse = 0.0;
    /// PSNR of the mean MSE (finite unless every reconstruction is exact).
    double psnr_db = 0.0;
    /// Mean SSIM; NaN for non-image data.
    double ssim = 0.0;
    std::size_t count = 0;
};

struct GridCell {
    double omega_enc = 0.0;
    double omega_dec = 0.0;
    ReconStats stats;
};

struct BenchRow {
    std::string method;
    /// Zero for the plain DDIM row, which has no optimizer settings.
    int iterations = 0;
    double beta = 0.0;
    double omega = 0.0;
    ReconStats stats;
};

struct TradeoffRow {
    EditMethod method = EditMethod::pti;
    /// Stage-1 learning rate used for the pti rows.
    double beta = 0.0;
    TradeoffPoint point;
};

/// Plain DDIM reconstruction of each test input with its true class as the
/// condition, for every (omega_enc, omega_dec) pair (row-major in enc).
std::vector<GridCell> run_grid_experiment(const DenoiserModel& model, const NoiseSchedule& sched,
                                          const RunConfig& cfg, const std::vector<double>& omegas_enc,
                                          const std::vector<double>& omegas_dec);

/// Methods from {ddim, nti, pti}; ddim contributes one row at pti.omega,
/// nti and pti one row per (N, beta). Conditions are the true classes.
std::vector<BenchRow> run_inversion_bench(const DenoiserModel& model, const NoiseSchedule& sched,
                                          const RunConfig& cfg, const std::vector<std::string>& methods,
                                          const std::vector<int>& iterations,
                                          const std::vector<double>& betas);

/// Source-class inputs edited toward edit.target_class: one row per
/// (method, eta) for pti, ddim-edit and latent-interp, plus extra pti rows
/// for every entry of experiments.tradeoff_betas.
std::vector<TradeoffRow> run_tradeoff(const DenoiserModel& model, const NoiseSchedule& sched,
                                      const RunConfig& cfg, const std::vector<double>& etas);

/// "# seed=...,schema_version=1,config_hash=0x..." header line.
std::string csv_header_comment(const RunConfig& cfg);
std::string grid_csv(const RunConfig& cfg, const std::vector<GridCell>& cells);
std::string bench_csv(const RunConfig& cfg, const std::vector<BenchRow>& rows);
std::string tradeoff_csv(const RunConfig& cfg, const std::vector<TradeoffRow>& rows);

/// Fixed-precision number formatting shared by all CSV writers.
std::string format_number(double v);

}  // namespace ptilab
