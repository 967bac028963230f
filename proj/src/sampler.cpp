#include "ptilab/sampler.hpp"

#include <cmath>
#include <string>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

// sqrt(abar') predict_x0(z, t, eps) + sqrt(1 - abar') eps
Latent ddim_transfer(std::span<const double> z, int t, int t_target, std::span<const double> eps,
                     const NoiseSchedule& sched) {
    const Latent x0 = predict_x0(z, t, eps, sched);
    const double ab = sched.alpha_bar(t_target);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Latent out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

void require_finite(std::span<const double> z, const char* where, int t) {
    if (!all_finite(z)) {
        throw NumericalError(std::string(where) + ": non-finite latent at timestep " + std::to_string(t));
    }
}

}  // namespace

Vec guide(std::span<const double> eps_uncond, std::span<const double> eps_cond, double omega) {
    if (eps_uncond.size() != eps_cond.size()) throw DimensionError("guide: prediction size mismatch");
    if (omega == 0.0) return {eps_uncond.begin(), eps_uncond.end()};
    if (omega == 1.0) return {eps_cond.begin(), eps_cond.end()};
    Vec out(eps_uncond.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = eps_uncond[i] + omega * (eps_cond[i] - eps_uncond[i]);
    }
    return out;
}

Vec cfg_eps(const DenoiserModel& model, std::span<const double> z, int t,
            std::span<const double> c, std::span<const double> null_embedding, double omega) {
    if (!std::isfinite(omega)) throw ConfigError("guidance scale must be finite");
    if (omega == 1.0) return eps_forward(model, z, t, c).eps;
    const Vec eps_u = eps_forward(model, z, t, null_embedding).eps;
    if (omega == 0.0) return eps_u;
    return guide(eps_u, eps_forward(model, z, t, c).eps, omega);
}

Vec cfg_eps(const DenoiserModel& model, std::span<const double> z, int t,
            std::span<const double> c, double omega) {
    return cfg_eps(model, z, t, c, model.params.embed_table.row(0), omega);
}

Latent predict_x0(std::span<const double> z, int t, std::span<const double> eps,
                  const NoiseSchedule& sched) {
    if (z.size() != eps.size()) throw DimensionError("predict_x0: dim(eps) != dim(z)");
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Latent out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = (z[i] - b * eps[i]) / a;
    return out;
}

Latent ddim_step(std::span<const double> z, int t, int t_prev, std::span<const double> eps,
                 const NoiseSchedule& sched) {
    if (!(t_prev < t)) throw ConfigError("ddim_step requires t_prev < t");
    return ddim_transfer(z, t, t_prev, eps, sched);
}

Latent ddim_invert_step(std::span<const double> z, int t, int t_next,
                        std::span<const double> eps, const NoiseSchedule& sched) {
    if (!(t_next > t)) throw ConfigError("ddim_invert_step requires t_next > t");
    return ddim_transfer(z, t, t_next, eps, sched);
}

double ddim_eps_coefficient(int t, int t_target, const NoiseSchedule& sched) {
    const double ab = sched.alpha_bar(t);
    const double ab_target = sched.alpha_bar(t_target);
    return std::sqrt(1.0 - ab_target) - std::sqrt(ab_target) * std::sqrt(1.0 - ab) / std::sqrt(ab);
}

const Latent& Trajectory::at_tau_index(int i) const {
    for (std::size_t k = 0; k < tau_indices.size(); ++k) {
        if (tau_indices[k] == i) return latents[k];
    }
    throw ConfigError("trajectory has no latent for tau index " + std::to_string(i));
}

void Trajectory::validate() const {
    if (tau_indices.size() != latents.size()) throw DimensionError("trajectory: index/latent count mismatch");
    for (std::size_t k = 1; k < tau_indices.size(); ++k) {
        const bool ok = direction == Direction::forward ? tau_indices[k] > tau_indices[k - 1]
                                                        : tau_indices[k] < tau_indices[k - 1];
        if (!ok) throw ConfigError("trajectory: tau indices not monotone in its direction");
        if (latents[k].size() != latents[0].size()) throw DimensionError("trajectory: mixed latent dimensions");
    }
}

Trajectory invert_trajectory(const DenoiserModel& model, std::span<const double> z0,
                             std::span<const double> c, double omega, const DdimSteps& steps,
                             const NoiseSchedule& sched) {
    Trajectory traj;
    traj.direction = Trajectory::Direction::forward;
    Latent z(z0.begin(), z0.end());
    require_finite(z, "invert_trajectory", steps.taus[0]);
    traj.tau_indices.push_back(0);
    traj.latents.push_back(z);
    for (int i = 0; i < steps.start_index; ++i) {
        const int t = steps.taus[i];
        const int t_next = steps.taus[i + 1];
        const Vec eps = cfg_eps(model, z, t, c, omega);
        z = ddim_invert_step(z, t, t_next, eps, sched);
        require_finite(z, "invert_trajectory", t_next);
        traj.tau_indices.push_back(i + 1);
        traj.latents.push_back(z);
    }
    return traj;
}

Trajectory sample_trajectory(const DenoiserModel& model, std::span<const double> z_start,
                             const std::vector<Embedding>& conds, double omega,
                             const DdimSteps& steps, const NoiseSchedule& sched) {
    if (conds.size() != static_cast<std::size_t>(steps.start_index)) {
        throw ConfigError("sample_trajectory: got " + std::to_string(conds.size()) +
                          " conditions for " + std::to_string(steps.start_index) + " steps");
    }
    Trajectory traj;
    traj.direction = Trajectory::Direction::reverse;
    Latent z(z_start.begin(), z_start.end());
    traj.tau_indices.push_back(steps.start_index);
    traj.latents.push_back(z);
    for (int i = steps.start_index, k = 0; i >= 1; --i, ++k) {
        const int t = steps.taus[i];
        const int t_prev = steps.taus[i - 1];
        const Vec eps = cfg_eps(model, z, t, conds[k], omega);
        z = ddim_step(z, t, t_prev, eps, sched);
        require_finite(z, "sample_trajectory", t_prev);
        traj.tau_indices.push_back(i - 1);
        traj.latents.push_back(z);
    }
    return traj;
}

}  // namespace ptilab
