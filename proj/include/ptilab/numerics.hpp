#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ptilab {

using Vec = std::vector<double>;

/// Row-major dense matrix of doubles.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// Elementwise helpers. All of them throw DimensionError on size mismatch.
Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec scaled(std::span<const double> a, double s);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

/// xoshiro256** generator seeded through splitmix64.
///
/// The output stream is fully specified (integer arithmetic only for the raw
/// stream), so a seed reproduces the same numbers on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    /// Independent stream for (root seed, stream id); used to give every
    /// experiment cell its own generator regardless of execution order.
    static Rng stream(std::uint64_t root_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);
    /// One Box-Muller pair from two consecutive uniforms (u1, u2):
    /// (sqrt(-2 ln(1 - u1)) cos(2 pi u2), sqrt(-2 ln(1 - u1)) sin(2 pi u2)).
    std::array<double, 2> normal_pair();

    const std::array<std::uint64_t, 4>& state() const { return s_; }

private:
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& x);

/// n i.i.d. standard normal draws. Pairs are consumed in order: element 2i is
/// the cosine branch and 2i+1 the sine branch of the i-th Box-Muller pair; an
/// odd tail discards the final sine value.
Vec gaussian(Rng& rng, std::size_t n);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every i.
/// Throws NumericalError if f returns a non-finite value.
Vec finite_diff_grad(const ScalarFn& f, std::span<const double> x, double h = 1e-5);

/// 64-bit FNV-1a; stable across platforms, used for config hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

}  // namespace ptilab
