#include "rfprint/nn/model.hpp"

#include <cmath>
#include <cstring>

#include "rfprint/error.hpp"

namespace rfprint::nn {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void he_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : t.values()) v = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
}

}  // namespace

std::size_t ModelConfig::flat_features() const {
    if (conv_filters.empty()) throw InvalidArgument("model: need at least one conv block");
    std::size_t width = input_width;
    for (std::size_t b = 0; b + 1 < conv_filters.size(); ++b) {
        width /= 2;
        if (width == 0) throw InvalidArgument("model: max pooling reaches zero width at block " + std::to_string(b + 1));
    }
    if (avg_pool == 0 || width / avg_pool == 0)
        throw InvalidArgument("model: average pool of " + std::to_string(avg_pool) + " exceeds width " +
                              std::to_string(width));
    return conv_filters.back() * input_rows * (width / avg_pool);
}

void ModelConfig::validate() const {
    for (auto f : conv_filters)
        if (f == 0) throw InvalidArgument("model: conv blocks need at least one filter");
    if (kernel_width == 0) throw InvalidArgument("model: kernel width must be >= 1");
    if (classes < 2) throw InvalidArgument("model: need at least two classes");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) throw InvalidArgument("model: dropout rate must lie in [0, 1)");
    if (input_rows == 0) throw InvalidArgument("model: input needs at least one row");
    (void)flat_features();
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::size_t c_in = 1;
    for (auto f : cfg_.conv_filters) {
        ConvBlock b{Tensor({f, c_in, 1, cfg_.kernel_width}), Tensor({f}), Tensor({f}, 1.0f), Tensor({f}),
                    Tensor({f}), Tensor({f}, 1.0f)};
        grads_.push_back({Tensor(b.weight.shape()), Tensor({f}), Tensor({f}), Tensor({f}), {}, {}});
        blocks_.push_back(std::move(b));
        c_in = f;
    }
    fc_w_ = Tensor({cfg_.classes, cfg_.flat_features()});
    fc_b_ = Tensor({cfg_.classes});
    grad_fc_w_ = Tensor(fc_w_.shape());
    grad_fc_b_ = Tensor(fc_b_.shape());
}

void Model::initialize(std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Init);
    for (auto& b : blocks_) {
        he_uniform(b.weight, b.weight.dim(1) * b.weight.dim(3), rng);
        b.bias.fill(0.0f);
        b.gamma.fill(1.0f);
        b.beta.fill(0.0f);
        b.running_mean.fill(0.0f);
        b.running_var.fill(1.0f);
    }
    he_uniform(fc_w_, fc_w_.dim(1), rng);
    fc_b_.fill(0.0f);
    have_cache_ = false;
}

BlockSpec Model::spec_for(std::size_t block) const {
    return {block + 1 == blocks_.size() ? cfg_.avg_pool : 0, cfg_.batchnorm};
}

Tensor Model::forward(const Tensor& x, Mode mode, Rng* dropout_rng) {
    require_shape(x, {0, 1, cfg_.input_rows, cfg_.input_width}, "model input");
    const bool train = mode == Mode::Train;
    const bool use_ref = cfg_.backend == Backend::Reference;
    if (train && dropout_rng == nullptr && cfg_.dropout_rate > 0.0f)
        throw InvalidArgument("model: training forward needs a dropout generator");
    have_cache_ = false;
    cache_.resize(train ? blocks_.size() : 0);
    Tensor h;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const BlockSpec spec = spec_for(i);
        if (train) {
            Tensor in = i == 0 ? x : std::move(h);
            h = use_ref ? reference::block_forward_train(std::move(in), blocks_[i], spec, cache_[i])
                        : parallel::block_forward_train(std::move(in), blocks_[i], spec, cache_[i]);
        } else {
            const Tensor& in = i == 0 ? x : h;
            h = use_ref ? reference::block_forward_infer(in, blocks_[i], spec)
                        : parallel::block_forward_infer(in, blocks_[i], spec);
        }
    }
    h.reshape({h.dim(0), element_count(h.shape()) / h.dim(0)});
    if (train && cfg_.dropout_rate > 0.0f) h = dropout_train(h, cfg_.dropout_rate, *dropout_rng, dropout_mask_);
    else dropout_mask_.clear();
    Tensor logits = fc_forward(h, fc_w_, fc_b_);
    if (train) flat_ = std::move(h);
    have_cache_ = train;
    return logits;
}

void Model::backward(const Tensor& grad_logits) {
    if (!have_cache_) throw InvalidArgument("model: backward() needs a preceding Train-mode forward()");
    const bool use_ref = cfg_.backend == Backend::Reference;
    auto fc = fc_backward(grad_logits, flat_, fc_w_);
    grad_fc_w_ = std::move(fc.grad_w);
    grad_fc_b_ = std::move(fc.grad_b);
    Tensor g = dropout_mask_.empty() ? std::move(fc.grad_x) : dropout_backward(fc.grad_x, dropout_mask_);
    const Shape& last_in = cache_.back().input.shape();
    g.reshape({last_in[0], blocks_.back().weight.dim(0), last_in[2], last_in[3] / cfg_.avg_pool});
    for (std::size_t i = blocks_.size(); i-- > 0;) {
        const BlockSpec spec = spec_for(i);
        const bool need_x = i > 0;
        auto bg = use_ref ? reference::block_backward(g, blocks_[i], spec, cache_[i], need_x)
                          : parallel::block_backward(g, blocks_[i], spec, cache_[i], need_x);
        grads_[i].weight = std::move(bg.grad_w);
        grads_[i].bias = std::move(bg.grad_b);
        grads_[i].gamma = std::move(bg.grad_gamma);
        grads_[i].beta = std::move(bg.grad_beta);
        g = std::move(bg.grad_x);
    }
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& b : blocks_) out.insert(out.end(), {&b.weight, &b.bias, &b.gamma, &b.beta});
    out.insert(out.end(), {&fc_w_, &fc_b_});
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    std::vector<const Tensor*> out;
    for (const auto& b : blocks_) out.insert(out.end(), {&b.weight, &b.bias, &b.gamma, &b.beta});
    out.insert(out.end(), {&fc_w_, &fc_b_});
    return out;
}

std::vector<Tensor*> Model::gradients() {
    std::vector<Tensor*> out;
    for (auto& b : grads_) out.insert(out.end(), {&b.weight, &b.bias, &b.gamma, &b.beta});
    out.insert(out.end(), {&grad_fc_w_, &grad_fc_b_});
    return out;
}

std::vector<Tensor*> Model::buffers() {
    std::vector<Tensor*> out;
    for (auto& b : blocks_) out.insert(out.end(), {&b.running_mean, &b.running_var});
    return out;
}

std::vector<const Tensor*> Model::buffers() const {
    std::vector<const Tensor*> out;
    for (const auto& b : blocks_) out.insert(out.end(), {&b.running_mean, &b.running_var});
    return out;
}

Tensor frames_to_tensor(std::span<const Frame> frames) {
    std::vector<std::size_t> all(frames.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return frames_to_tensor(frames, all);
}

Tensor frames_to_tensor(std::span<const Frame> frames, std::span<const std::size_t> indices) {
    if (indices.empty()) throw InvalidArgument("frames_to_tensor: no frames");
    if (indices.front() >= frames.size()) throw InvalidArgument("frames_to_tensor: frame index out of range");
    const std::size_t len = frames[indices.front()].length();
    Tensor t({indices.size(), 1, 2, len});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= frames.size()) throw InvalidArgument("frames_to_tensor: frame index out of range");
        const Frame& f = frames[indices[i]];
        if (f.length() != len) throw ShapeMismatch("frames_to_tensor: frames of different lengths");
        std::memcpy(t.data() + i * 2 * len, f.data.data(), 2 * len * sizeof(float));
    }
    return t;
}

}  // namespace rfprint::nn
