#include "ptilab/dataset.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

constexpr std::array<std::array<std::string_view, kShapeGrid>, kShapeClasses> kMasks{{
    {"........",
     ".######.",
     ".#....#.",
     ".#....#.",
     ".#....#.",
     ".#....#.",
     ".######.",
     "........"},
    {"........",
     "...##...",
     "..####..",
     ".######.",
     ".######.",
     "..####..",
     "...##...",
     "........"},
    {"........",
     "...##...",
     "...##...",
     ".######.",
     ".######.",
     "...##...",
     "...##...",
     "........"},
    {"........",
     "...##...",
     "...##...",
     "..####..",
     "..####..",
     ".######.",
     ".######.",
     "........"},
}};

// Every canonical mask leaves a one-pixel border free.
constexpr int kMaskMargin = 1;

void check_class(int k, std::size_t num_classes) {
    if (k < 0 || static_cast<std::size_t>(k) >= num_classes) {
        throw ConfigError("class id " + std::to_string(k) + " out of range [0, " +
                          std::to_string(num_classes) + ")");
    }
}

}  // namespace

void MixtureSpec::validate() const {
    if (means.size() < 2) throw ConfigError("mixture needs at least 2 classes");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("mixture sigma must be > 0");
    const std::size_t d = means.front().size();
    if (d == 0) throw ConfigError("mixture dimension must be >= 1");
    for (const auto& m : means) {
        if (m.size() != d) throw ConfigError("mixture means have inconsistent dimensions");
    }
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            if (std::sqrt(squared_distance(means[i], means[j])) <= 4.0 * sigma) {
                throw ConfigError("mixture means " + std::to_string(i) + " and " +
                                  std::to_string(j) + " are within 4 sigma");
            }
        }
    }
}

MixtureSpec make_circle_mixture(std::size_t num_classes, std::size_t dim, double sigma,
                                double radius) {
    if (dim < 2) throw ConfigError("circle mixture needs dim >= 2");
    MixtureSpec spec;
    spec.sigma = sigma;
    for (std::size_t k = 0; k < num_classes; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                             static_cast<double>(num_classes);
        Vec m(dim, 0.0);
        m[0] = radius * std::cos(angle);
        m[1] = radius * std::sin(angle);
        // Snap cos/sin round-off (e.g. cos(pi/2) = 6e-17) to exact zeros.
        for (auto& v : m) {
            if (std::abs(v) < 1e-12) v = 0.0;
        }
        spec.means.push_back(std::move(m));
    }
    spec.validate();
    return spec;
}

Dataset sample_mixture(const MixtureSpec& spec, std::size_t n, Rng& rng) {
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(rng.uniform_index(spec.num_classes()));
        Vec x = gaussian(rng, spec.dim());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = spec.means[k][j] + spec.sigma * x[j];
        out.push_back({std::move(x), k});
    }
    return out;
}

Dataset sample_mixture_class(const MixtureSpec& spec, int k, std::size_t n, Rng& rng) {
    check_class(k, spec.num_classes());
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec x = gaussian(rng, spec.dim());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = spec.means[k][j] + spec.sigma * x[j];
        out.push_back({std::move(x), k});
    }
    return out;
}

double component_nll(const MixtureSpec& spec, std::span<const double> x, int k) {
    check_class(k, spec.num_classes());
    if (x.size() != spec.dim()) throw DimensionError("component_nll: dimension mismatch");
    const double var = spec.sigma * spec.sigma;
    const double d = static_cast<double>(spec.dim());
    return 0.5 * d * std::log(2.0 * std::numbers::pi * var) +
           squared_distance(x, spec.means[k]) / (2.0 * var);
}

void ShapeSpec::validate() const {
    if (jitter < 0 || jitter > kMaskMargin) {
        throw ConfigError("shape jitter must lie in [0, " + std::to_string(kMaskMargin) + "]");
    }
}

const std::array<std::string_view, kShapeGrid>& shape_mask(Shape shape) {
    return kMasks.at(static_cast<std::size_t>(shape));
}

Vec render_shape_at(int shape_class, int row_offset, int col_offset) {
    check_class(shape_class, kShapeClasses);
    const auto& mask = kMasks[static_cast<std::size_t>(shape_class)];
    Vec img(kShapePixels, -1.0);
    const int n = static_cast<int>(kShapeGrid);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (mask[r][c] != '#') continue;
            const int rr = r + row_offset;
            const int cc = c + col_offset;
            if (rr < 0 || rr >= n || cc < 0 || cc >= n) {
                throw ConfigError("shape offset moves pixels outside the grid");
            }
            img[static_cast<std::size_t>(rr * n + cc)] = 1.0;
        }
    }
    return img;
}

Vec render_shape(const ShapeSpec& spec, int shape_class, Rng& rng) {
    spec.validate();
    check_class(shape_class, kShapeClasses);
    const auto span = static_cast<std::uint64_t>(2 * spec.jitter + 1);
    const int dr = static_cast<int>(rng.uniform_index(span)) - spec.jitter;
    const int dc = static_cast<int>(rng.uniform_index(span)) - spec.jitter;
    return render_shape_at(shape_class, dr, dc);
}

Dataset sample_shapes(const ShapeSpec& spec, std::size_t n, Rng& rng) {
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(rng.uniform_index(kShapeClasses));
        out.push_back({render_shape(spec, k, rng), k});
    }
    return out;
}

}  // namespace ptilab
