#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ptilab/dataset.hpp"
#include "ptilab/numerics.hpp"
#include "ptilab/schedule.hpp"

namespace ptilab {

using Latent = Vec;
using Embedding = Vec;

/// Sinusoidal features of t / T_train: 16 (sin, cos) pairs with frequencies
/// 10^(4 i / 15), i = 0..15, laid out as [sin f0, cos f0, sin f1, cos f1, ...].
inline constexpr std::size_t kTimeFeatures = 32;

Vec time_embedding(int t, int train_steps);

struct ModelDims {
    std::size_t data_dim = 2;
    std::size_t cond_dim = 16;
    std::size_t hidden = 128;
    std::size_t num_classes = 4;
    int train_steps = 1000;

    std::size_t input_dim() const { return data_dim + kTimeFeatures + cond_dim; }
    void validate() const;
};

/// y = x W + b with W stored input-major (rows = fan_in, cols = fan_out).
struct DenseLayer {
    Mat weight;
    Vec bias;
};

/// Every trainable tensor of the denoiser. Gradients use the same layout.
struct DenoiserParams {
    DenseLayer input;   // input_dim -> hidden, SiLU
    DenseLayer hidden;  // hidden -> hidden, SiLU
    DenseLayer output;  // hidden -> data_dim, linear
    Mat embed_table;    // (K + 1) x cond_dim; row 0 is the null embedding

    static DenoiserParams zeros(const ModelDims& dims);

    struct Tensor {
        std::string name;
        std::vector<std::size_t> shape;
        std::span<double> values;
    };
    struct ConstTensor {
        std::string name;
        std::vector<std::size_t> shape;
        std::span<const double> values;
    };
    /// Fixed-order named views; the order is the serialization order.
    std::vector<Tensor> tensors();
    std::vector<ConstTensor> tensors() const;
};

/// eps_theta(z, t, c): MLP on concat(z, time_embedding(t), c).
struct DenoiserModel {
    ModelDims dims;
    DenoiserParams params;
};

/// Glorot-uniform weights, zero biases, embedding rows ~ N(0, 0.1^2).
DenoiserModel init_denoiser(const ModelDims& dims, Rng& rng);
/// All parameters zero: eps_theta == 0 everywhere.
DenoiserModel zero_denoiser(const ModelDims& dims);

/// Row index of the embedding table for a class (nullopt selects the null row).
std::size_t embed_row(const DenoiserModel& model, std::optional<int> k);
Embedding embed(const DenoiserModel& model, std::optional<int> k);

struct ForwardCache {
    Vec input;
    Vec pre1, act1;
    Vec pre2, act2;
    /// Table row the condition came from, when it came from the table.
    std::optional<std::size_t> embed_row;
};

struct EpsForward {
    Vec eps;
    ForwardCache cache;
};

EpsForward eps_forward(const DenoiserModel& model, std::span<const double> z, int t,
                       std::span<const double> c,
                       std::optional<std::size_t> source_row = std::nullopt);

/// J_c(eps)^T upstream, via the cached activations.
Embedding grad_wrt_embedding(const DenoiserModel& model, const ForwardCache& cache,
                             std::span<const double> upstream);

/// Adds J_theta(eps)^T upstream into `grads`. The embedding-input gradient
/// goes to the cached table row, if any.
void accumulate_param_grads(const DenoiserModel& model, const ForwardCache& cache,
                            std::span<const double> upstream, DenoiserParams& grads);

DenoiserParams grad_wrt_params(const DenoiserModel& model, const ForwardCache& cache,
                               std::span<const double> upstream);

struct TrainConfig {
    int steps = 20000;
    int batch = 128;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double p_uncond = 0.1;

    void validate() const;
};

struct TrainResult {
    DenoiserModel model;
    /// Mean batch loss per optimizer step.
    std::vector<double> loss_curve;
};

/// Minimizes E ||eps - eps_theta(x_t, t, c)||^2 with Adam. Each example uses
/// its class row, swapped for the null row with probability p_uncond; t is
/// uniform in 1..T_train. Throws NumericalError when the loss diverges.
TrainResult train_denoiser(const Dataset& data, const ModelDims& dims, const NoiseSchedule& sched,
                           const TrainConfig& cfg, Rng& rng);

}  // namespace ptilab
