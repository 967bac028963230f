#pragma once

#include "ptilab/inversion.hpp"

namespace ptilab {

struct EditConfig {
    /// Interpolation ratio toward the target embedding, in [0, 1].
    double eta = 0.9;
    /// Guidance scale for both the tuning and the editing stage.
    double omega = 7.5;
    int source_class = 0;
    int target_class = 1;
    /// Tuning settings; its omega is overridden by `omega` above.
    PtiConfig pti;

    void validate() const;
};

/// eta c* + (1 - eta) c_t, returning c_t exactly at eta = 0 and c* exactly at eta = 1.
Embedding interpolate_condition(std::span<const double> c_t, std::span<const double> c_star,
                                double eta);

/// Stage 2 only: sample from the inverted latent with per-step conditions
/// interpolate_condition(c_t, c*, eta) taken from a finished tuning run.
Vec edit_from_pti(const DenoiserModel& model, const PtiResult& tuned,
                  std::span<const double> c_star, double eta, double omega,
                  const DdimSteps& steps, const NoiseSchedule& sched);

/// Full two-stage edit: prompt tuning initialised at c* = embed(target), then
/// condition-interpolated sampling.
Vec edit_with_pti(const DenoiserModel& model, std::span<const double> x_in, const EditConfig& cfg,
                  const DdimSteps& steps, const NoiseSchedule& sched);

/// DDIM-Edit baseline: unconditional inversion, then sampling with constant c*.
Vec edit_ddim(const DenoiserModel& model, std::span<const double> x_in, int target_class,
              double omega, const DdimSteps& steps, const NoiseSchedule& sched);

/// Latent interpolation baseline: after every sampling step conditioned on c*
/// the latent is replaced by eta z_t + (1 - eta) z*_t.
Vec edit_latent_interp(const DenoiserModel& model, std::span<const double> x_in, int target_class,
                       double eta, double omega, const DdimSteps& steps,
                       const NoiseSchedule& sched);
Vec edit_latent_interp(const DenoiserModel& model, const Trajectory& inverted, int target_class,
                       double eta, double omega, const DdimSteps& steps,
                       const NoiseSchedule& sched);

}  // namespace ptilab
