#pragma once

// Shared test helpers: seeded generators for property tests and independent
// reference implementations used as oracles.

#include <cstdint>
#include <vector>

#include "ptilab/denoiser.hpp"
#include "ptilab/numerics.hpp"

namespace ptilab::test {

/// Seeded source of random test inputs.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(hi - lo + 1))); }
    Vec vec(std::size_t n, double lo = -1.0, double hi = 1.0);
    Vec normal(std::size_t n, double scale = 1.0);
    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

/// Glorot-initialised model with non-zero biases and embeddings scaled to
/// unit order, so every code path of the forward pass is exercised.
DenoiserModel random_model(const ModelDims& dims, std::uint64_t seed);

/// Constant-output model: eps_theta == value everywhere.
DenoiserModel constant_model(const ModelDims& dims, const Vec& value);

/// Straightforward re-implementation of the denoiser forward pass.
Vec reference_forward(const DenoiserModel& model, const Vec& z, int t, const Vec& c);

/// -log N(x; mean, sigma^2 I) written out directly.
double reference_gaussian_nll(const Vec& mean, double sigma, const Vec& x);

/// Global single-window SSIM evaluated straight from its definition.
double reference_ssim(const Vec& a, const Vec& b, double dynamic_range);

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
double relative_error(const Vec& a, const Vec& b);

/// Every parameter of the model flattened in tensor order.
Vec flatten_params(const DenoiserParams& params);
void unflatten_params(const Vec& flat, DenoiserParams& params);

}  // namespace ptilab::test
