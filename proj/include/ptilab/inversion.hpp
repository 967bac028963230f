#pragma once

#include <vector>

#include "ptilab/denoiser.hpp"
#include "ptilab/sampler.hpp"
#include "ptilab/schedule.hpp"

namespace ptilab {

struct PtiConfig {
    /// Where the tuned condition starts when the caller does not supply one.
    enum class Init { source, target };

    double omega = 7.5;
    /// Plain gradient-descent learning rate.
    double beta = 0.1;
    /// Updates per timestep.
    int iterations = 1;
    Init init = Init::source;

    /// Library-level check: omega finite and >= 0, beta finite and >= 0,
    /// iterations >= 1. The run configuration is stricter (omega > 1, beta > 0).
    void validate() const;
};

/// Output of a per-timestep embedding optimization (prompt tuning or its
/// null-text counterpart).
struct InversionResult {
    /// Optimized embedding per sampling step, in sampling order (entry 0
    /// drives the step leaving taus[start_index]).
    std::vector<Embedding> cond_schedule;
    /// Reconstruction z~_0.
    Latent recon;
    /// ||z*_{t-1} - z_{t-1}(z~_t, t, c_t)||^2 at the final c_t of each step.
    std::vector<double> per_step_loss;
    /// Per step: the loss before each of the N updates, then the final loss.
    std::vector<std::vector<double>> iteration_losses;
    /// The omega = 0 inversion trajectory used as per-step targets.
    Trajectory trajectory;
};

using PtiResult = InversionResult;

/// Prompt tuning inversion: invert at omega = 0, then for each step tune the
/// conditional embedding by N gradient-descent updates on the one-step
/// reconstruction loss, advance z~ with the tuned embedding and warm-start
/// the next step from it.
PtiResult prompt_tuning_inversion(const DenoiserModel& model, std::span<const double> z0,
                                  std::span<const double> c_init, const PtiConfig& cfg,
                                  const DdimSteps& steps, const NoiseSchedule& sched);
/// Same, reusing an existing omega = 0 inversion trajectory of z0.
PtiResult prompt_tuning_inversion(const DenoiserModel& model, const Trajectory& trajectory,
                                  std::span<const double> c_init, const PtiConfig& cfg,
                                  const DdimSteps& steps, const NoiseSchedule& sched);

/// Null-text inversion baseline: the identical loop with the unconditional
/// embedding tuned and the conditional one fixed. cond_schedule holds the
/// tuned null embeddings.
InversionResult null_text_inversion(const DenoiserModel& model, std::span<const double> z0,
                                    std::span<const double> c_fixed,
                                    std::span<const double> null_init, const PtiConfig& cfg,
                                    const DdimSteps& steps, const NoiseSchedule& sched);
InversionResult null_text_inversion(const DenoiserModel& model, const Trajectory& trajectory,
                                    std::span<const double> c_fixed,
                                    std::span<const double> null_init, const PtiConfig& cfg,
                                    const DdimSteps& steps, const NoiseSchedule& sched);

/// Invert at omega_enc, then sample at omega_dec with the constant condition c.
Latent ddim_reconstruct(const DenoiserModel& model, std::span<const double> z0,
                        std::span<const double> c, double omega_enc, double omega_dec,
                        const DdimSteps& steps, const NoiseSchedule& sched);

}  // namespace ptilab
