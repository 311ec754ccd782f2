#include "rfprint/nn/block.hpp"

namespace rfprint::nn::reference {

namespace {

Tensor pool_forward(const Tensor& a, const BlockSpec& spec, std::vector<std::uint32_t>* argmax) {
    if (spec.avg_window != 0) return avgpool_width(a, spec.avg_window);
    auto r = maxpool_1x2(a);
    if (argmax != nullptr) *argmax = std::move(r.argmax);
    return std::move(r.y);
}

}  // namespace

Tensor block_forward_train(Tensor x, ConvBlock& p, const BlockSpec& spec, BlockCache& cache) {
    cache.input = std::move(x);
    const Tensor z = conv_forward(cache.input, p.weight, p.bias);
    const Tensor bn = batchnorm_train(z, p.gamma, p.beta, p.running_mean, p.running_var, spec.batchnorm, cache.bn);
    cache.relu_out = relu(bn);
    return pool_forward(cache.relu_out, spec, &cache.argmax);
}

Tensor block_forward_infer(const Tensor& x, const ConvBlock& p, const BlockSpec& spec) {
    const Tensor z = conv_forward(x, p.weight, p.bias);
    const Tensor bn = batchnorm_infer(z, p.gamma, p.beta, p.running_mean, p.running_var, spec.batchnorm.epsilon);
    return pool_forward(relu(bn), spec, nullptr);
}

BlockGrads block_backward(const Tensor& grad_out, const ConvBlock& p, const BlockSpec& spec, const BlockCache& cache,
                          bool need_grad_x) {
    const Shape& a_shape = cache.relu_out.shape();
    Tensor g = spec.avg_window != 0 ? avgpool_width_backward(grad_out, spec.avg_window, a_shape)
                                    : maxpool_1x2_backward(grad_out, cache.argmax, a_shape);
    g = relu_backward(g, cache.relu_out);
    auto bn = batchnorm_backward(g, p.gamma, cache.bn);
    auto conv = conv_backward(bn.grad_x, cache.input, p.weight);
    BlockGrads out;
    if (need_grad_x) out.grad_x = std::move(conv.grad_x);
    out.grad_w = std::move(conv.grad_w);
    out.grad_b = std::move(conv.grad_b);
    out.grad_gamma = std::move(bn.grad_gamma);
    out.grad_beta = std::move(bn.grad_beta);
    return out;
}

}  // namespace rfprint::nn::reference
