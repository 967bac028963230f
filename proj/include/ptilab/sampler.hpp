#pragma once

#include <cstddef>
#include <vector>

#include "ptilab/denoiser.hpp"
#include "ptilab/schedule.hpp"

namespace ptilab {

// Identity codec standing in for a latent autoencoder.
inline Latent encode(std::span<const double> x) { return {x.begin(), x.end()}; }
inline Vec decode(std::span<const double> z) { return {z.begin(), z.end()}; }

struct GuidanceConfig {
    double omega = 0.0;
};

/// eps_u + omega (eps_c - eps_u); returns eps_u exactly at omega = 0 and
/// eps_c exactly at omega = 1.
Vec guide(std::span<const double> eps_uncond, std::span<const double> eps_cond, double omega);

/// Classifier-free guided prediction with the model's own null embedding.
Vec cfg_eps(const DenoiserModel& model, std::span<const double> z, int t,
            std::span<const double> c, double omega);
/// Same, with an explicit unconditional embedding.
Vec cfg_eps(const DenoiserModel& model, std::span<const double> z, int t,
            std::span<const double> c, std::span<const double> null_embedding, double omega);

/// (z_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
Latent predict_x0(std::span<const double> z, int t, std::span<const double> eps,
                  const NoiseSchedule& sched);

/// Deterministic DDIM update from t to t_prev < t.
Latent ddim_step(std::span<const double> z, int t, int t_prev, std::span<const double> eps,
                 const NoiseSchedule& sched);
/// Reversed DDIM update from t to t_next > t, eps evaluated at (z_t, t).
Latent ddim_invert_step(std::span<const double> z, int t, int t_next,
                        std::span<const double> eps, const NoiseSchedule& sched);

/// d z_target / d eps for a DDIM transfer from t to t_target:
/// sqrt(1 - abar') - sqrt(abar') sqrt(1 - abar) / sqrt(abar).
double ddim_eps_coefficient(int t, int t_target, const NoiseSchedule& sched);

struct Trajectory {
    enum class Direction { forward, reverse };

    Direction direction = Direction::forward;
    /// Indices into DdimSteps::taus, one per latent.
    std::vector<int> tau_indices;
    std::vector<Latent> latents;

    std::size_t size() const { return latents.size(); }
    /// Latent stored for tau index i.
    const Latent& at_tau_index(int i) const;
    void validate() const;
};

/// DDIM inversion from z0 through taus[start_index]; stores every latent, so
/// the result has start_index + 1 entries with tau indices 0..start_index.
Trajectory invert_trajectory(const DenoiserModel& model, std::span<const double> z0,
                             std::span<const double> c, double omega, const DdimSteps& steps,
                             const NoiseSchedule& sched);

/// DDIM sampling from taus[start_index] down to taus[0]; conds[k] drives the
/// k-th step taken (k = 0 is the step leaving taus[start_index]).
Trajectory sample_trajectory(const DenoiserModel& model, std::span<const double> z_start,
                             const std::vector<Embedding>& conds, double omega,
                             const DdimSteps& steps, const NoiseSchedule& sched);

}  // namespace ptilab
