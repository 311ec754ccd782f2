#pragma once

#include <cstddef>
#include <vector>

#include "rfprint/nn/kernels.hpp"

namespace rfprint::nn {

/// Parameters of one conv -> batch norm -> ReLU -> pool block.
struct ConvBlock {
    Tensor weight;  // F x C x 1 x K
    Tensor bias;    // F
    Tensor gamma;   // F
    Tensor beta;    // F
    Tensor running_mean;
    Tensor running_var;
};

struct BlockSpec {
    /// 0 selects 1 x 2 max pooling, otherwise average pooling over this
    /// many samples.
    std::size_t avg_window = 0;
    BatchNormConfig batchnorm{};
};

/// What a Train-mode forward keeps for backward. Each backend fills only
/// the fields it needs.
struct BlockCache {
    Tensor input;
    // reference
    BatchNormCache bn;
    Tensor relu_out;
    std::vector<std::uint32_t> argmax;
    // parallel
    Tensor z;  // conv output
    std::vector<float> mean;
    std::vector<float> inv_std;
};

struct BlockGrads {
    Tensor grad_x;  // empty unless requested
    Tensor grad_w;
    Tensor grad_b;
    Tensor grad_gamma;
    Tensor grad_beta;
};

namespace reference {
/// Train mode: batch statistics, running-stat update, cache for backward.
/// The input is moved into the cache.
Tensor block_forward_train(Tensor x, ConvBlock& p, const BlockSpec& spec, BlockCache& cache);
Tensor block_forward_infer(const Tensor& x, const ConvBlock& p, const BlockSpec& spec);
BlockGrads block_backward(const Tensor& grad_out, const ConvBlock& p, const BlockSpec& spec, const BlockCache& cache,
                          bool need_grad_x);
}  // namespace reference

namespace parallel {
// Fused per-sample passes: the conv output is the only full-size
// activation kept; normalization, ReLU and pooling are recomputed from it
// in backward while each sample's data is cache resident.
Tensor block_forward_train(Tensor x, ConvBlock& p, const BlockSpec& spec, BlockCache& cache);
Tensor block_forward_infer(const Tensor& x, const ConvBlock& p, const BlockSpec& spec);
BlockGrads block_backward(const Tensor& grad_out, const ConvBlock& p, const BlockSpec& spec, const BlockCache& cache,
                          bool need_grad_x);
}  // namespace parallel

}  // namespace rfprint::nn
