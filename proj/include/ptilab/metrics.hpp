#pragma once

#include <cstddef>
#include <vector>

#include "ptilab/dataset.hpp"
#include "ptilab/editor.hpp"

namespace ptilab {

double mse(std::span<const double> a, std::span<const double> b);
/// 10 log10(max_val^2 / mse); +infinity when mse == 0.
double psnr_from_mse(double mse_value, double max_val = 2.0);
double psnr(std::span<const double> a, std::span<const double> b, double max_val = 2.0);

/// Single-window SSIM over a whole 8x8 image with C1 = (0.01 L)^2 and
/// C2 = (0.03 L)^2, using population (1/N) moments.
double ssim(std::span<const double> a, std::span<const double> b, double dynamic_range = 2.0);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

enum class EditMethod { pti, ddim_edit, latent_interp };

const char* edit_method_name(EditMethod m);

/// One operating point of an editing method, averaged over the inputs.
struct TradeoffPoint {
    double eta = 0.0;
    /// Mean target-class negative log-density of the edits.
    double alignment_nll = 0.0;
    /// Mean L2 distance between input and edit.
    double fidelity_l2 = 0.0;
    double mse = 0.0;
    double psnr_db = 0.0;
    std::size_t count = 0;
};

/// Runs `method` on every input for every eta (in the given order) and
/// aggregates means. Prompt tuning is run once per input and reused across eta.
std::vector<TradeoffPoint> tradeoff_sweep(const DenoiserModel& model, const MixtureSpec& spec,
                                          const std::vector<Vec>& inputs,
                                          const std::vector<double>& etas, const EditConfig& cfg,
                                          EditMethod method, const DdimSteps& steps,
                                          const NoiseSchedule& sched);

}  // namespace ptilab
