#include "ptilab/inversion.hpp"

#include <cmath>
#include <string>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

enum class Tuned { conditional, unconditional };

struct StepEval {
    Latent z_prev;
    double loss = 0.0;
    ForwardCache cache;  // forward pass of the tuned branch
};

// Core loop shared by prompt tuning and null-text inversion. `fixed` is the
// embedding held constant, `tuned_init` the starting point of the optimized one.
InversionResult tune_per_step(const DenoiserModel& model, const Trajectory& trajectory,
                              std::span<const double> fixed, std::span<const double> tuned_init,
                              Tuned which, const PtiConfig& cfg, const DdimSteps& steps,
                              const NoiseSchedule& sched) {
    cfg.validate();
    trajectory.validate();
    if (trajectory.size() != static_cast<std::size_t>(steps.start_index) + 1) {
        throw DimensionError("inversion trajectory has " + std::to_string(trajectory.size()) +
                             " latents, expected " + std::to_string(steps.start_index + 1));
    }
    if (fixed.size() != model.dims.cond_dim || tuned_init.size() != model.dims.cond_dim) {
        throw DimensionError("embedding dimension does not match the model");
    }

    const double omega = cfg.omega;
    // d eps~ / d eps_theta(., tuned) for the guided combination.
    const double branch_coeff = which == Tuned::conditional ? omega : 1.0 - omega;

    InversionResult result;
    result.trajectory = trajectory;
    Embedding tuned(tuned_init.begin(), tuned_init.end());
    Latent z = trajectory.at_tau_index(steps.start_index);

    for (int i = steps.start_index; i >= 1; --i) {
        const int t = steps.taus[i];
        const int t_prev = steps.taus[i - 1];
        const Latent& target = trajectory.at_tau_index(i - 1);
        const double k = ddim_eps_coefficient(t, t_prev, sched);

        // The fixed branch does not depend on the tuned embedding.
        const Vec eps_fixed = eps_forward(model, z, t, fixed).eps;

        auto evaluate = [&](std::span<const double> e) {
            StepEval ev;
            EpsForward fwd = eps_forward(model, z, t, e);
            const Vec eps = which == Tuned::conditional ? guide(eps_fixed, fwd.eps, omega)
                                                        : guide(fwd.eps, eps_fixed, omega);
            ev.z_prev = ddim_step(z, t, t_prev, eps, sched);
            ev.loss = squared_distance(target, ev.z_prev);
            ev.cache = std::move(fwd.cache);
            if (!std::isfinite(ev.loss) || !all_finite(ev.z_prev)) {
                throw NumericalError("inversion: non-finite loss or latent at timestep " + std::to_string(t));
            }
            return ev;
        };

        std::vector<double> losses;
        losses.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
        for (int j = 0; j < cfg.iterations; ++j) {
            const StepEval ev = evaluate(tuned);
            losses.push_back(ev.loss);
            // dL/d eps_theta(., tuned) = 2 (z_prev - z*) * k * branch_coeff
            Vec upstream(ev.z_prev.size());
            for (std::size_t d = 0; d < upstream.size(); ++d) {
                upstream[d] = 2.0 * (ev.z_prev[d] - target[d]) * k * branch_coeff;
            }
            const Embedding grad = grad_wrt_embedding(model, ev.cache, upstream);
            if (!all_finite(grad)) {
                throw NumericalError("inversion: non-finite gradient at timestep " + std::to_string(t));
            }
            axpy(-cfg.beta, grad, tuned);
        }
        StepEval final_eval = evaluate(tuned);
        losses.push_back(final_eval.loss);

        result.cond_schedule.push_back(tuned);
        result.per_step_loss.push_back(final_eval.loss);
        result.iteration_losses.push_back(std::move(losses));
        z = std::move(final_eval.z_prev);
    }
    result.recon = decode(z);
    return result;
}

}  // namespace

void PtiConfig::validate() const {
    if (!std::isfinite(omega) || omega < 0.0) throw ConfigError("guidance scale must be finite and >= 0");
    if (!std::isfinite(beta) || beta < 0.0) throw ConfigError("learning rate beta must be finite and >= 0");
    if (iterations < 1) throw ConfigError("iterations per timestep N must be >= 1");
}

PtiResult prompt_tuning_inversion(const DenoiserModel& model, const Trajectory& trajectory,
                                  std::span<const double> c_init, const PtiConfig& cfg,
                                  const DdimSteps& steps, const NoiseSchedule& sched) {
    return tune_per_step(model, trajectory, model.params.embed_table.row(0), c_init,
                         Tuned::conditional, cfg, steps, sched);
}

PtiResult prompt_tuning_inversion(const DenoiserModel& model, std::span<const double> z0,
                                  std::span<const double> c_init, const PtiConfig& cfg,
                                  const DdimSteps& steps, const NoiseSchedule& sched) {
    const Trajectory traj = invert_trajectory(model, encode(z0), c_init, 0.0, steps, sched);
    return prompt_tuning_inversion(model, traj, c_init, cfg, steps, sched);
}

InversionResult null_text_inversion(const DenoiserModel& model, const Trajectory& trajectory,
                                    std::span<const double> c_fixed,
                                    std::span<const double> null_init, const PtiConfig& cfg,
                                    const DdimSteps& steps, const NoiseSchedule& sched) {
    return tune_per_step(model, trajectory, c_fixed, null_init, Tuned::unconditional, cfg, steps,
                         sched);
}

InversionResult null_text_inversion(const DenoiserModel& model, std::span<const double> z0,
                                    std::span<const double> c_fixed,
                                    std::span<const double> null_init, const PtiConfig& cfg,
                                    const DdimSteps& steps, const NoiseSchedule& sched) {
    const Trajectory traj = invert_trajectory(model, encode(z0), c_fixed, 0.0, steps, sched);
    return null_text_inversion(model, traj, c_fixed, null_init, cfg, steps, sched);
}

Latent ddim_reconstruct(const DenoiserModel& model, std::span<const double> z0,
                        std::span<const double> c, double omega_enc, double omega_dec,
                        const DdimSteps& steps, const NoiseSchedule& sched) {
    const Trajectory traj = invert_trajectory(model, encode(z0), c, omega_enc, steps, sched);
    const std::vector<Embedding> conds(static_cast<std::size_t>(steps.start_index),
                                       Embedding(c.begin(), c.end()));
    const Trajectory out = sample_trajectory(model, traj.latents.back(), conds, omega_dec, steps, sched);
    return decode(out.latents.back());
}

}  // namespace ptilab
