#include "ptilab/editor.hpp"

#include <cmath>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

void check_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("interpolation ratio eta must lie in [0, 1]");
}

// eta a + (1 - eta) b, exact at both endpoints.
Vec blend(std::span<const double> a, std::span<const double> b, double eta) {
    if (a.size() != b.size()) throw DimensionError("interpolation: dimension mismatch");
    if (eta == 1.0) return {a.begin(), a.end()};
    if (eta == 0.0) return {b.begin(), b.end()};
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = eta * a[i] + (1.0 - eta) * b[i];
    return out;
}

}  // namespace

void EditConfig::validate() const {
    check_eta(eta);
    if (!std::isfinite(omega) || omega < 0.0) throw ConfigError("edit guidance scale must be finite and >= 0");
    pti.validate();
}

Embedding interpolate_condition(std::span<const double> c_t, std::span<const double> c_star,
                                double eta) {
    check_eta(eta);
    return blend(c_star, c_t, eta);
}

Vec edit_from_pti(const DenoiserModel& model, const PtiResult& tuned,
                  std::span<const double> c_star, double eta, double omega,
                  const DdimSteps& steps, const NoiseSchedule& sched) {
    std::vector<Embedding> conds;
    conds.reserve(tuned.cond_schedule.size());
    for (const auto& c_t : tuned.cond_schedule) conds.push_back(interpolate_condition(c_t, c_star, eta));
    const Latent& z_start = tuned.trajectory.at_tau_index(steps.start_index);
    const Trajectory out = sample_trajectory(model, z_start, conds, omega, steps, sched);
    return decode(out.latents.back());
}

Vec edit_with_pti(const DenoiserModel& model, std::span<const double> x_in, const EditConfig& cfg,
                  const DdimSteps& steps, const NoiseSchedule& sched) {
    cfg.validate();
    const Embedding c_star = embed(model, cfg.target_class);
    PtiConfig pti = cfg.pti;
    pti.omega = cfg.omega;
    const PtiResult tuned = prompt_tuning_inversion(model, encode(x_in), c_star, pti, steps, sched);
    return edit_from_pti(model, tuned, c_star, cfg.eta, cfg.omega, steps, sched);
}

Vec edit_ddim(const DenoiserModel& model, std::span<const double> x_in, int target_class,
              double omega, const DdimSteps& steps, const NoiseSchedule& sched) {
    const Embedding c_star = embed(model, target_class);
    const Trajectory inverted =
        invert_trajectory(model, encode(x_in), embed(model, std::nullopt), 0.0, steps, sched);
    const std::vector<Embedding> conds(static_cast<std::size_t>(steps.start_index), c_star);
    const Trajectory out =
        sample_trajectory(model, inverted.latents.back(), conds, omega, steps, sched);
    return decode(out.latents.back());
}

Vec edit_latent_interp(const DenoiserModel& model, const Trajectory& inverted, int target_class,
                       double eta, double omega, const DdimSteps& steps,
                       const NoiseSchedule& sched) {
    check_eta(eta);
    const Embedding c_star = embed(model, target_class);
    Latent z = inverted.at_tau_index(steps.start_index);
    for (int i = steps.start_index; i >= 1; --i) {
        const int t = steps.taus[i];
        const Vec eps = cfg_eps(model, z, t, c_star, omega);
        const Latent stepped = ddim_step(z, t, steps.taus[i - 1], eps, sched);
        z = blend(stepped, inverted.at_tau_index(i - 1), eta);
        if (!all_finite(z)) throw NumericalError("edit_latent_interp: non-finite latent");
    }
    return decode(z);
}

Vec edit_latent_interp(const DenoiserModel& model, std::span<const double> x_in, int target_class,
                       double eta, double omega, const DdimSteps& steps,
                       const NoiseSchedule& sched) {
    const Trajectory inverted =
        invert_trajectory(model, encode(x_in), embed(model, std::nullopt), 0.0, steps, sched);
    return edit_latent_interp(model, inverted, target_class, eta, omega, steps, sched);
}

}  // namespace ptilab
