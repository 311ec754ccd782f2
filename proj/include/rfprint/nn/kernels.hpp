#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rfprint/nn/tensor.hpp"
#include "rfprint/seed.hpp"

// Activations are N x C x R x W: batch, channels, rows (I and Q), width.
// Convolutions use 1 x K kernels, so rows never mix.

namespace rfprint::nn {

/// Same padding for a width-K kernel: out[w] = sum_k W[k] * x[w + k - K/2].
constexpr std::size_t conv_pad_left(std::size_t kernel) { return kernel / 2; }

struct ConvGrads {
    Tensor grad_x;
    Tensor grad_w;
    Tensor grad_b;
};

struct BatchNormConfig {
    float epsilon = 1e-5f;
    /// Weight of the current batch in the running-stat update.
    float momentum = 0.1f;
};

struct BatchNormCache {
    Tensor x_hat;
    std::vector<float> inv_std;
};

struct BatchNormGrads {
    Tensor grad_x;
    Tensor grad_gamma;
    Tensor grad_beta;
};

// The two kernel families below compute the same maps. `reference` is a
// plain serial transcription of the definitions; `parallel` is the one used
// for training: GEMM-based and OpenMP-parallel over the batch, with
// reductions done in a fixed order so results do not depend on the thread
// count.

namespace reference {
Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b);
ConvGrads conv_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w);
Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                       Tensor& running_var, const BatchNormConfig& cfg, BatchNormCache& cache);
Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& running_mean,
                       const Tensor& running_var, float epsilon);
BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache);
}  // namespace reference

namespace parallel {
Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b);
ConvGrads conv_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w);
Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                       Tensor& running_var, const BatchNormConfig& cfg, BatchNormCache& cache);
Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& running_mean,
                       const Tensor& running_var, float epsilon);
BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache);
}  // namespace parallel

// Cheap element-wise and pooling layers have a single implementation.

Tensor relu(const Tensor& x);
/// Gradient through relu given its output y.
Tensor relu_backward(const Tensor& grad_y, const Tensor& y);

struct PoolResult {
    Tensor y;
    std::vector<std::uint32_t> argmax;  // flat input index per output
};

/// 1 x 2 max pooling with stride 2 along the width; ties go to the first.
PoolResult maxpool_1x2(const Tensor& x);
Tensor maxpool_1x2_backward(const Tensor& grad_y, const std::vector<std::uint32_t>& argmax, const Shape& x_shape);

/// Non-overlapping average pooling along the width.
Tensor avgpool_width(const Tensor& x, std::size_t window);
Tensor avgpool_width_backward(const Tensor& grad_y, std::size_t window, const Shape& x_shape);

/// Inverted dropout: kept values are scaled by 1 / (1 - rate). The mask
/// holds the applied scale per element (0 or 1 / (1 - rate)).
Tensor dropout_train(const Tensor& x, float rate, Rng& rng, std::vector<float>& mask);
Tensor dropout_backward(const Tensor& grad_y, const std::vector<float>& mask);

/// x: N x D, w: U x D, b: U.
Tensor fc_forward(const Tensor& x, const Tensor& w, const Tensor& b);
struct FcGrads {
    Tensor grad_x;
    Tensor grad_w;
    Tensor grad_b;
};
FcGrads fc_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w);

struct SoftmaxXent {
    double loss;  // mean over the batch
    Tensor probs;
};

SoftmaxXent softmax_xent(const Tensor& logits, std::span<const std::uint8_t> labels);
/// (p - onehot) / batch.
Tensor softmax_xent_backward(const Tensor& probs, std::span<const std::uint8_t> labels);

}  // namespace rfprint::nn
