#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rfprint/frame.hpp"
#include "rfprint/nn/block.hpp"
#include "rfprint/seed.hpp"

namespace rfprint::nn {

enum class Backend { Reference, Parallel };

struct ModelConfig {
    std::vector<std::size_t> conv_filters{16, 32, 48, 64};
    std::size_t kernel_width = 4;
    /// Average-pool window after the last block; the others max-pool 1 x 2.
    std::size_t avg_pool = 32;
    std::size_t classes = 5;
    float dropout_rate = 0.5f;
    BatchNormConfig batchnorm{};
    std::size_t input_rows = 2;
    std::size_t input_width = kFrameLength;
    /// Not part of the architecture; picks the kernel family.
    Backend backend = Backend::Parallel;

    /// Width seen by the FC layer after flattening. Throws InvalidArgument
    /// when some stage would end with zero width.
    std::size_t flat_features() const;
    void validate() const;
};

enum class Mode { Train, Infer };

/// Conv/BN/ReLU blocks, pooling, dropout and a softmax classifier.
class Model {
public:
    explicit Model(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }

    /// He-uniform conv/FC weights, zero biases, gamma 1, beta 0, running
    /// mean 0 and variance 1.
    void initialize(std::uint64_t seed);

    /// x: N x 1 x R x W. In Train mode the activations needed by
    /// backward() are kept and `dropout_rng` must be non-null.
    Tensor forward(const Tensor& x, Mode mode, Rng* dropout_rng = nullptr);

    /// Fills gradients() from the loss gradient w.r.t. the logits of the
    /// last Train-mode forward().
    void backward(const Tensor& grad_logits);

    /// Trainable tensors in a fixed order: per block weight, bias, gamma,
    /// beta, then FC weight and bias. gradients() matches element-wise.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<Tensor*> gradients();
    /// Running batch-norm statistics (mean, var per block).
    std::vector<Tensor*> buffers();
    std::vector<const Tensor*> buffers() const;

    std::vector<ConvBlock>& blocks() { return blocks_; }
    const std::vector<ConvBlock>& blocks() const { return blocks_; }
    Tensor& fc_weight() { return fc_w_; }
    Tensor& fc_bias() { return fc_b_; }

private:
    ModelConfig cfg_;
    std::vector<ConvBlock> blocks_;
    Tensor fc_w_;
    Tensor fc_b_;

    std::vector<ConvBlock> grads_;
    Tensor grad_fc_w_;
    Tensor grad_fc_b_;

    BlockSpec spec_for(std::size_t block) const;

    std::vector<BlockCache> cache_;
    Tensor flat_;
    std::vector<float> dropout_mask_;
    bool have_cache_ = false;
};

/// Packs frames (2 x W each) into an N x 1 x 2 x W tensor.
Tensor frames_to_tensor(std::span<const Frame> frames);
Tensor frames_to_tensor(std::span<const Frame> frames, std::span<const std::size_t> indices);

}  // namespace rfprint::nn
