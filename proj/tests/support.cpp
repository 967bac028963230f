#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ptilab::test {

Vec Gen::vec(std::size_t n, double lo, double hi) {
    Vec v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
}

Vec Gen::normal(std::size_t n, double scale) {
    Vec v = gaussian(rng_, n);
    for (auto& x : v) x *= scale;
    return v;
}

DenoiserModel random_model(const ModelDims& dims, std::uint64_t seed) {
    Rng rng(seed);
    DenoiserModel model = init_denoiser(dims, rng);
    for (auto* layer : {&model.params.input, &model.params.hidden, &model.params.output}) {
        for (auto& b : layer->bias) b = 0.2 * (2.0 * rng.uniform() - 1.0);
    }
    for (auto& e : model.params.embed_table.data) e *= 5.0;
    return model;
}

DenoiserModel constant_model(const ModelDims& dims, const Vec& value) {
    DenoiserModel model = zero_denoiser(dims);
    model.params.output.bias = value;
    return model;
}

Vec reference_forward(const DenoiserModel& model, const Vec& z, int t, const Vec& c) {
    const auto& dims = model.dims;
    std::vector<double> x;
    for (double v : z) x.push_back(v);
    const double s = static_cast<double>(t) / dims.train_steps;
    for (int i = 0; i < 16; ++i) {
        const double f = std::pow(10000.0, i / 15.0);
        x.push_back(std::sin(f * s));
        x.push_back(std::cos(f * s));
    }
    for (double v : c) x.push_back(v);

    auto layer = [](const DenseLayer& L, const std::vector<double>& in, bool act) {
        std::vector<double> out(L.bias.size());
        for (std::size_t o = 0; o < out.size(); ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < in.size(); ++i) acc += in[i] * L.weight(i, o);
            acc += L.bias[o];
            out[o] = act ? acc / (1.0 + std::exp(-acc)) : acc;
        }
        return out;
    };
    const auto h1 = layer(model.params.input, x, true);
    const auto h2 = layer(model.params.hidden, h1, true);
    return layer(model.params.output, h2, false);
}

double reference_gaussian_nll(const Vec& mean, double sigma, const Vec& x) {
    double log_density = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double density = std::exp(-0.5 * std::pow((x[i] - mean[i]) / sigma, 2)) /
                               (sigma * std::sqrt(2.0 * std::numbers::pi));
        log_density += std::log(density);
    }
    return -log_density;
}

double reference_ssim(const Vec& a, const Vec& b, double L) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double va = 0, vb = 0, cov = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma) / n;
        vb += (b[i] - mb) * (b[i] - mb) / n;
        cov += (a[i] - ma) * (b[i] - mb) / n;
    }
    const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
    return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

double relative_error(const Vec& a, const Vec& b) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

Vec flatten_params(const DenoiserParams& params) {
    Vec flat;
    for (const auto& t : params.tensors()) flat.insert(flat.end(), t.values.begin(), t.values.end());
    return flat;
}

void unflatten_params(const Vec& flat, DenoiserParams& params) {
    std::size_t k = 0;
    for (auto& t : params.tensors()) {
        for (auto& v : t.values) v = flat[k++];
    }
}

}  // namespace ptilab::test
