#include "ptilab/schedule.hpp"

#include <cmath>
#include <string>

#include "ptilab/errors.hpp"

namespace ptilab {

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > train_steps) {
        throw ConfigError("timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(train_steps) + "]");
    }
    return alpha_bars[static_cast<std::size_t>(t)];
}

NoiseSchedule make_linear_schedule(int train_steps, double beta_start, double beta_end) {
    if (train_steps < 1) throw ConfigError("T_train must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw ConfigError("schedule requires 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.train_steps = train_steps;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    const auto n = static_cast<std::size_t>(train_steps) + 1;
    s.betas.assign(n, 0.0);
    s.alphas.assign(n, 1.0);
    s.alpha_bars.assign(n, 1.0);
    for (int t = 1; t <= train_steps; ++t) {
        const double frac = train_steps == 1 ? 0.0
                                             : static_cast<double>(t - 1) /
                                                   static_cast<double>(train_steps - 1);
        const double beta = beta_start + frac * (beta_end - beta_start);
        s.betas[t] = beta;
        s.alphas[t] = 1.0 - beta;
        s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
    }
    return s;
}

DdimSteps ddim_timesteps(int train_steps, int sampler_steps, double ratio) {
    if (sampler_steps < 1 || sampler_steps > train_steps) {
        throw ConfigError("DDIM steps must satisfy 1 <= S <= T_train");
    }
    if (!(ratio > 0.0) || !(ratio <= 1.0)) throw ConfigError("encoding ratio must lie in (0, 1]");
    DdimSteps steps;
    steps.sampler_steps = sampler_steps;
    steps.ratio = ratio;
    steps.taus.resize(static_cast<std::size_t>(sampler_steps) + 1);
    steps.taus[0] = 0;
    for (int i = 1; i <= sampler_steps; ++i) {
        steps.taus[i] = static_cast<int>(static_cast<long long>(i) * train_steps / sampler_steps);
    }
    // ceil(r * S), but 0.8 * 50 evaluates to 40.000000000000007 in binary, so
    // products within round-off of an integer snap to it.
    const double scaled_steps = ratio * sampler_steps;
    const double nearest = std::round(scaled_steps);
    steps.start_index = std::abs(scaled_steps - nearest) < 1e-9 ? static_cast<int>(nearest)
                                                                : static_cast<int>(std::ceil(scaled_steps));
    return steps;
}

Vec q_sample(std::span<const double> x0, int t, std::span<const double> eps,
             const NoiseSchedule& sched) {
    if (t < 1 || t > sched.train_steps) throw ConfigError("q_sample: t outside [1, T_train]");
    if (x0.size() != eps.size()) throw DimensionError("q_sample: dim(eps) != dim(x0)");
    const double ab = sched.alpha_bars[t];
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Vec out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

}  // namespace ptilab
