#pragma once

#include "rfprint/error.hpp"
#include "rfprint/nn/tensor.hpp"

namespace rfprint::nn::detail {

struct ConvDims {
    std::size_t n, c, r, w, f, k;
};

inline ConvDims conv_dims(const Tensor& x, const Tensor& weight) {
    require_shape(x, {0, 0, 0, 0}, "conv input");
    const std::size_t c = x.dim(1);
    require_shape(weight, {0, c, 1, 0}, "conv weight");
    if (weight.dim(3) == 0) throw ShapeMismatch("conv weight: kernel width must be >= 1");
    return {x.dim(0), c, x.dim(2), x.dim(3), weight.dim(0), weight.dim(3)};
}

struct ChannelDims {
    std::size_t n, c, inner;  // inner = rows * width
};

inline ChannelDims channel_dims(const Tensor& x, const char* what) {
    require_shape(x, {0, 0, 0, 0}, what);
    return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)};
}

inline void require_channel_params(std::size_t channels, std::initializer_list<const Tensor*> params) {
    for (const Tensor* t : params) require_shape(*t, {channels}, "batchnorm parameter");
}

}  // namespace rfprint::nn::detail
