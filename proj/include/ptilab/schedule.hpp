#pragma once

#include <cstddef>
#include <vector>

#include "ptilab/numerics.hpp"

namespace ptilab {

/// Linear-beta noise schedule. Arrays are indexed by timestep t = 0..T_train;
/// index 0 holds the boundary convention beta = 0, alpha = alpha_bar = 1.
struct NoiseSchedule {
    int train_steps = 0;
    double beta_start = 0.0;
    double beta_end = 0.0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    double alpha_bar(int t) const;
};

NoiseSchedule make_linear_schedule(int train_steps, double beta_start, double beta_end);

/// DDIM timestep subsequence. taus[0] = 0 is the data boundary and
/// taus[1..S] are the sampler timesteps; inversion visits taus[0..start_index].
struct DdimSteps {
    int sampler_steps = 0;
    double ratio = 1.0;
    std::vector<int> taus;
    int start_index = 0;
};

DdimSteps ddim_timesteps(int train_steps, int sampler_steps, double ratio);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
Vec q_sample(std::span<const double> x0, int t, std::span<const double> eps,
             const NoiseSchedule& sched);

}  // namespace ptilab
