#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "ptilab/numerics.hpp"

namespace ptilab {

struct Sample {
    Vec x;
    int label = 0;
};

using Dataset = std::vector<Sample>;

/// Isotropic Gaussian mixture with one component per class.
struct MixtureSpec {
    std::vector<Vec> means;
    double sigma = 0.15;

    std::size_t num_classes() const { return means.size(); }
    std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

    /// Throws ConfigError unless K >= 2, sigma > 0, all means share one
    /// dimension and every pair of means is more than 4 sigma apart.
    void validate() const;
};

/// K means evenly spaced on a circle of the given radius in the first two
/// coordinates (angle 2 pi k / K), remaining coordinates zero.
MixtureSpec make_circle_mixture(std::size_t num_classes = 4, std::size_t dim = 2,
                                double sigma = 0.15, double radius = 1.0);

Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, Rng& rng);
/// Samples from one component only.
Dataset sample_mixture_class(const MixtureSpec& spec, int k, std::size_t n, Rng& rng);

/// -log N(x; means[k], sigma^2 I).
double component_nll(const MixtureSpec& spec, std::span<const double> x, int k);

enum class Shape { square = 0, circle = 1, cross = 2, triangle = 3 };

inline constexpr std::size_t kShapeGrid = 8;
inline constexpr std::size_t kShapePixels = kShapeGrid * kShapeGrid;
inline constexpr std::size_t kShapeClasses = 4;

struct ShapeSpec {
    /// Translation drawn uniformly from [-jitter, jitter] on each axis.
    int jitter = 1;

    void validate() const;
};

/// Canonical (zero-jitter) 8x8 mask for a shape, rows top to bottom, '#' set.
const std::array<std::string_view, kShapeGrid>& shape_mask(Shape shape);

/// Renders a shape into a row-major 64-vector with pixels in {-1, +1}.
/// Draws the row offset, then the column offset, from rng.
Vec render_shape(const ShapeSpec& spec, int shape_class, Rng& rng);
/// Deterministic rendering with an explicit offset (no rng).
Vec render_shape_at(int shape_class, int row_offset, int col_offset);

Dataset sample_shapes(const ShapeSpec& spec, std::size_t n, Rng& rng);

}  // namespace ptilab
