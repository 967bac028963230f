#include "ptilab/denoiser.hpp"

#include <cmath>
#include <string>

#include "ptilab/errors.hpp"

namespace ptilab {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double silu(double x) { return x * sigmoid(x); }

double silu_grad(double x) {
    const double s = sigmoid(x);
    return s + x * s * (1.0 - s);
}

DenseLayer zero_layer(std::size_t fan_in, std::size_t fan_out) {
    return {Mat(fan_in, fan_out), Vec(fan_out, 0.0)};
}

void glorot_fill(Mat& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (auto& v : w.data) v = (2.0 * rng.uniform() - 1.0) * limit;
}

// out = b + x W, accumulated row by row so the inner loop is a contiguous axpy.
void dense_forward(const DenseLayer& layer, std::span<const double> x, Vec& out) {
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t i = 0; i < layer.weight.rows; ++i) {
        const double xi = x[i];
        const auto w = layer.weight.row(i);
        for (std::size_t o = 0; o < w.size(); ++o) out[o] += xi * w[o];
    }
}

// dL/dx = W dL/dy, restricted to input rows [first, first + count).
Vec dense_backward_input(const DenseLayer& layer, std::span<const double> grad_out,
                         std::size_t first, std::size_t count) {
    Vec g(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = dot(layer.weight.row(first + i), grad_out);
    return g;
}

void dense_accumulate(DenseLayer& grads, std::span<const double> x,
                      std::span<const double> grad_out) {
    for (std::size_t i = 0; i < grads.weight.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        auto w = grads.weight.row(i);
        for (std::size_t o = 0; o < w.size(); ++o) w[o] += xi * grad_out[o];
    }
    for (std::size_t o = 0; o < grad_out.size(); ++o) grads.bias[o] += grad_out[o];
}

struct HiddenGrads {
    Vec pre2;
    Vec pre1;
};

HiddenGrads backprop_hidden(const DenoiserModel& model, const ForwardCache& cache,
                            std::span<const double> upstream) {
    const auto& p = model.params;
    const std::size_t h = model.dims.hidden;
    HiddenGrads g;
    g.pre2 = dense_backward_input(p.output, upstream, 0, h);
    for (std::size_t i = 0; i < h; ++i) g.pre2[i] *= silu_grad(cache.pre2[i]);
    g.pre1 = dense_backward_input(p.hidden, g.pre2, 0, h);
    for (std::size_t i = 0; i < h; ++i) g.pre1[i] *= silu_grad(cache.pre1[i]);
    return g;
}

void check_cache(const DenoiserModel& model, const ForwardCache& cache,
                 std::span<const double> upstream) {
    if (upstream.size() != model.dims.data_dim) {
        throw DimensionError("upstream gradient has dimension " + std::to_string(upstream.size()) +
                             ", expected " + std::to_string(model.dims.data_dim));
    }
    if (cache.input.size() != model.dims.input_dim() || cache.pre1.size() != model.dims.hidden ||
        cache.pre2.size() != model.dims.hidden) {
        throw DimensionError("forward cache does not match the model dimensions");
    }
}

}  // namespace

Vec time_embedding(int t, int train_steps) {
    Vec out(kTimeFeatures);
    const double tau = static_cast<double>(t) / static_cast<double>(train_steps);
    constexpr std::size_t pairs = kTimeFeatures / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
        const double freq = std::pow(10.0, 4.0 * static_cast<double>(i) / (pairs - 1));
        out[2 * i] = std::sin(freq * tau);
        out[2 * i + 1] = std::cos(freq * tau);
    }
    return out;
}

void ModelDims::validate() const {
    if (data_dim == 0 || cond_dim == 0 || hidden == 0) {
        throw ConfigError("model dimensions must be positive");
    }
    if (num_classes < 1) throw ConfigError("model needs at least one class");
    if (train_steps < 1) throw ConfigError("model train_steps must be >= 1");
}

DenoiserParams DenoiserParams::zeros(const ModelDims& dims) {
    DenoiserParams p;
    p.input = zero_layer(dims.input_dim(), dims.hidden);
    p.hidden = zero_layer(dims.hidden, dims.hidden);
    p.output = zero_layer(dims.hidden, dims.data_dim);
    p.embed_table = Mat(dims.num_classes + 1, dims.cond_dim);
    return p;
}

std::vector<DenoiserParams::Tensor> DenoiserParams::tensors() {
    return {
        {"input.weight", {input.weight.rows, input.weight.cols}, input.weight.data},
        {"input.bias", {input.bias.size()}, input.bias},
        {"hidden.weight", {hidden.weight.rows, hidden.weight.cols}, hidden.weight.data},
        {"hidden.bias", {hidden.bias.size()}, hidden.bias},
        {"output.weight", {output.weight.rows, output.weight.cols}, output.weight.data},
        {"output.bias", {output.bias.size()}, output.bias},
        {"embed_table", {embed_table.rows, embed_table.cols}, embed_table.data},
    };
}

std::vector<DenoiserParams::ConstTensor> DenoiserParams::tensors() const {
    std::vector<ConstTensor> out;
    for (auto& t : const_cast<DenoiserParams*>(this)->tensors()) {
        out.push_back({t.name, t.shape, t.values});
    }
    return out;
}

DenoiserModel zero_denoiser(const ModelDims& dims) {
    dims.validate();
    return {dims, DenoiserParams::zeros(dims)};
}

DenoiserModel init_denoiser(const ModelDims& dims, Rng& rng) {
    DenoiserModel m = zero_denoiser(dims);
    glorot_fill(m.params.input.weight, rng);
    glorot_fill(m.params.hidden.weight, rng);
    glorot_fill(m.params.output.weight, rng);
    auto& table = m.params.embed_table.data;
    const Vec draws = gaussian(rng, table.size());
    for (std::size_t i = 0; i < table.size(); ++i) table[i] = 0.1 * draws[i];
    return m;
}

std::size_t embed_row(const DenoiserModel& model, std::optional<int> k) {
    if (!k) return 0;
    if (*k < 0 || static_cast<std::size_t>(*k) >= model.dims.num_classes) {
        throw ConfigError("embed: class id " + std::to_string(*k) + " out of range [0, " +
                          std::to_string(model.dims.num_classes) + ")");
    }
    return static_cast<std::size_t>(*k) + 1;
}

Embedding embed(const DenoiserModel& model, std::optional<int> k) {
    const auto row = model.params.embed_table.row(embed_row(model, k));
    return {row.begin(), row.end()};
}

EpsForward eps_forward(const DenoiserModel& model, std::span<const double> z, int t,
                       std::span<const double> c, std::optional<std::size_t> source_row) {
    const auto& dims = model.dims;
    if (z.size() != dims.data_dim) {
        throw DimensionError("eps_forward: latent has dimension " + std::to_string(z.size()) +
                             ", model expects " + std::to_string(dims.data_dim));
    }
    if (c.size() != dims.cond_dim) {
        throw DimensionError("eps_forward: condition has dimension " + std::to_string(c.size()) +
                             ", model expects " + std::to_string(dims.cond_dim));
    }
    if (!all_finite(z) || !all_finite(c)) throw NumericalError("eps_forward: non-finite input");

    EpsForward out;
    auto& cache = out.cache;
    cache.embed_row = source_row;
    cache.input.reserve(dims.input_dim());
    cache.input.insert(cache.input.end(), z.begin(), z.end());
    const Vec temb = time_embedding(t, dims.train_steps);
    cache.input.insert(cache.input.end(), temb.begin(), temb.end());
    cache.input.insert(cache.input.end(), c.begin(), c.end());

    const auto& p = model.params;
    dense_forward(p.input, cache.input, cache.pre1);
    cache.act1.resize(cache.pre1.size());
    for (std::size_t i = 0; i < cache.pre1.size(); ++i) cache.act1[i] = silu(cache.pre1[i]);
    dense_forward(p.hidden, cache.act1, cache.pre2);
    cache.act2.resize(cache.pre2.size());
    for (std::size_t i = 0; i < cache.pre2.size(); ++i) cache.act2[i] = silu(cache.pre2[i]);
    dense_forward(p.output, cache.act2, out.eps);
    return out;
}

Embedding grad_wrt_embedding(const DenoiserModel& model, const ForwardCache& cache,
                             std::span<const double> upstream) {
    check_cache(model, cache, upstream);
    const HiddenGrads g = backprop_hidden(model, cache, upstream);
    const std::size_t first = model.dims.data_dim + kTimeFeatures;
    return dense_backward_input(model.params.input, g.pre1, first, model.dims.cond_dim);
}

void accumulate_param_grads(const DenoiserModel& model, const ForwardCache& cache,
                            std::span<const double> upstream, DenoiserParams& grads) {
    check_cache(model, cache, upstream);
    const HiddenGrads g = backprop_hidden(model, cache, upstream);
    dense_accumulate(grads.output, cache.act2, upstream);
    dense_accumulate(grads.hidden, cache.act1, g.pre2);
    dense_accumulate(grads.input, cache.input, g.pre1);
    if (cache.embed_row) {
        const std::size_t first = model.dims.data_dim + kTimeFeatures;
        const Vec gc = dense_backward_input(model.params.input, g.pre1, first, model.dims.cond_dim);
        axpy(1.0, gc, grads.embed_table.row(*cache.embed_row));
    }
}

DenoiserParams grad_wrt_params(const DenoiserModel& model, const ForwardCache& cache,
                               std::span<const double> upstream) {
    DenoiserParams grads = DenoiserParams::zeros(model.dims);
    accumulate_param_grads(model, cache, upstream, grads);
    return grads;
}

void TrainConfig::validate() const {
    if (steps < 1) throw ConfigError("train.steps must be >= 1");
    if (batch < 1) throw ConfigError("train.batch must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
    if (!(p_uncond >= 0.0 && p_uncond < 1.0)) throw ConfigError("train.p_uncond must lie in [0, 1)");
}

namespace {

class Adam {
public:
    Adam(const DenoiserParams& shape_like, const TrainConfig& cfg)
        : cfg_(cfg), m_(shape_like), v_(shape_like) {
        for (auto& t : m_.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
        for (auto& t : v_.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
    }

    void step(DenoiserParams& params, DenoiserParams& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
        auto p = params.tensors();
        auto g = grads.tensors();
        auto m = m_.tensors();
        auto v = v_.tensors();
        for (std::size_t k = 0; k < p.size(); ++k) {
            for (std::size_t i = 0; i < p[k].values.size(); ++i) {
                const double gi = g[k].values[i];
                double& mi = m[k].values[i];
                double& vi = v[k].values[i];
                mi = cfg_.adam_beta1 * mi + (1.0 - cfg_.adam_beta1) * gi;
                vi = cfg_.adam_beta2 * vi + (1.0 - cfg_.adam_beta2) * gi * gi;
                p[k].values[i] -= cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.adam_eps);
            }
        }
    }

private:
    TrainConfig cfg_;
    DenoiserParams m_;
    DenoiserParams v_;
    int t_ = 0;
};

}  // namespace

TrainResult train_denoiser(const Dataset& data, const ModelDims& dims, const NoiseSchedule& sched,
                           const TrainConfig& cfg, Rng& rng) {
    if (data.empty()) throw ConfigError("train_denoiser: dataset is empty");
    cfg.validate();
    dims.validate();
    if (dims.train_steps != sched.train_steps) {
        throw ConfigError("train_denoiser: model and schedule disagree on T_train");
    }
    for (const auto& s : data) {
        if (s.x.size() != dims.data_dim) throw DimensionError("train_denoiser: sample dimension mismatch");
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= dims.num_classes) {
            throw ConfigError("train_denoiser: label out of range");
        }
    }

    TrainResult result{init_denoiser(dims, rng), {}};
    DenoiserModel& model = result.model;
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.steps));
    Adam adam(model.params, cfg);
    DenoiserParams grads = DenoiserParams::zeros(dims);
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch);

    for (int step = 0; step < cfg.steps; ++step) {
        for (auto& t : grads.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
        double loss = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            const Sample& s = data[rng.uniform_index(data.size())];
            const int t = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.train_steps)));
            const Vec noise = gaussian(rng, dims.data_dim);
            const bool drop = rng.uniform() < cfg.p_uncond;
            const std::size_t row = drop ? 0 : static_cast<std::size_t>(s.label) + 1;

            const Vec xt = q_sample(s.x, t, noise, sched);
            EpsForward fwd = eps_forward(model, xt, t, model.params.embed_table.row(row), row);
            Vec upstream(dims.data_dim);
            for (std::size_t i = 0; i < dims.data_dim; ++i) {
                const double diff = fwd.eps[i] - noise[i];
                loss += diff * diff;
                upstream[i] = 2.0 * diff * inv_batch;
            }
            accumulate_param_grads(model, fwd.cache, upstream, grads);
        }
        loss *= inv_batch;
        if (!std::isfinite(loss)) {
            throw NumericalError("train_denoiser: loss diverged at step " + std::to_string(step));
        }
        result.loss_curve.push_back(loss);
        adam.step(model.params, grads);
    }
    return result;
}

}  // namespace ptilab
