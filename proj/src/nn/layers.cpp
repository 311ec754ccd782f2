#include <algorithm>
#include <cmath>
#include <limits>

#include "rfprint/error.hpp"
#include "rfprint/nn/kernels.hpp"

namespace rfprint::nn {

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    const float* in = x.data();
    float* out = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    return y;
}

Tensor relu_backward(const Tensor& grad_y, const Tensor& y) {
    require_same_shape(grad_y, y, "relu_backward");
    Tensor gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = y[i] > 0.0f ? grad_y[i] : 0.0f;
    return gx;
}

PoolResult maxpool_1x2(const Tensor& x) {
    require_shape(x, {0, 0, 0, 0}, "maxpool_1x2");
    const std::size_t rows = x.dim(0) * x.dim(1) * x.dim(2);
    const std::size_t w_in = x.dim(3);
    const std::size_t w_out = w_in / 2;
    if (w_out == 0) throw ShapeMismatch("maxpool_1x2: width " + std::to_string(w_in) + " is too small");
    PoolResult r{Tensor({x.dim(0), x.dim(1), x.dim(2), w_out}), std::vector<std::uint32_t>(rows * w_out)};
    for (std::size_t row = 0; row < rows; ++row) {
        const float* in = x.data() + row * w_in;
        float* out = r.y.data() + row * w_out;
        std::uint32_t* arg = r.argmax.data() + row * w_out;
        for (std::size_t j = 0; j < w_out; ++j) {
            const bool second = in[2 * j + 1] > in[2 * j];
            out[j] = second ? in[2 * j + 1] : in[2 * j];
            arg[j] = static_cast<std::uint32_t>(row * w_in + 2 * j + (second ? 1 : 0));
        }
    }
    return r;
}

Tensor maxpool_1x2_backward(const Tensor& grad_y, const std::vector<std::uint32_t>& argmax, const Shape& x_shape) {
    if (grad_y.size() != argmax.size()) throw ShapeMismatch("maxpool_1x2_backward: gradient/argmax size mismatch");
    Tensor gx(x_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        if (argmax[i] >= gx.size()) throw ShapeMismatch("maxpool_1x2_backward: argmax out of range");
        gx[argmax[i]] += grad_y[i];
    }
    return gx;
}

Tensor avgpool_width(const Tensor& x, std::size_t window) {
    require_shape(x, {0, 0, 0, 0}, "avgpool_width");
    if (window == 0) throw InvalidArgument("avgpool_width: window must be >= 1");
    const std::size_t rows = x.dim(0) * x.dim(1) * x.dim(2);
    const std::size_t w_in = x.dim(3);
    const std::size_t w_out = w_in / window;
    if (w_out == 0) throw ShapeMismatch("avgpool_width: width " + std::to_string(w_in) + " is below the window");
    Tensor y({x.dim(0), x.dim(1), x.dim(2), w_out});
    const float scale = 1.0f / static_cast<float>(window);
    for (std::size_t row = 0; row < rows; ++row) {
        for (std::size_t j = 0; j < w_out; ++j) {
            const float* in = x.data() + row * w_in + j * window;
            float acc = 0.0f;
            for (std::size_t k = 0; k < window; ++k) acc += in[k];
            y[row * w_out + j] = acc * scale;
        }
    }
    return y;
}

Tensor avgpool_width_backward(const Tensor& grad_y, std::size_t window, const Shape& x_shape) {
    Tensor gx(x_shape);
    require_shape(gx, {0, 0, 0, 0}, "avgpool_width_backward");
    const std::size_t rows = gx.dim(0) * gx.dim(1) * gx.dim(2);
    const std::size_t w_in = gx.dim(3);
    const std::size_t w_out = w_in / window;
    if (grad_y.size() != rows * w_out) throw ShapeMismatch("avgpool_width_backward: gradient size mismatch");
    const float scale = 1.0f / static_cast<float>(window);
    for (std::size_t row = 0; row < rows; ++row)
        for (std::size_t j = 0; j < w_out; ++j)
            for (std::size_t k = 0; k < window; ++k)
                gx[row * w_in + j * window + k] = grad_y[row * w_out + j] * scale;
    return gx;
}

Tensor dropout_train(const Tensor& x, float rate, Rng& rng, std::vector<float>& mask) {
    if (!(rate >= 0.0f && rate < 1.0f)) throw InvalidArgument("dropout: rate must lie in [0, 1)");
    const float keep_scale = 1.0f / (1.0f - rate);
    mask.resize(x.size());
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        mask[i] = u < rate ? 0.0f : keep_scale;
        y[i] = x[i] * mask[i];
    }
    return y;
}

Tensor dropout_backward(const Tensor& grad_y, const std::vector<float>& mask) {
    if (grad_y.size() != mask.size()) throw ShapeMismatch("dropout_backward: mask size mismatch");
    Tensor gx(grad_y.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] = grad_y[i] * mask[i];
    return gx;
}

Tensor fc_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_shape(x, {0, 0}, "fc_forward input");
    const std::size_t n = x.dim(0), d = x.dim(1);
    require_shape(w, {0, d}, "fc_forward weight");
    const std::size_t u = w.dim(0);
    require_shape(b, {u}, "fc_forward bias");
    Tensor y({n, u});
    for (std::size_t i = 0; i < n; ++i) {
        const float* xi = x.data() + i * d;
        for (std::size_t o = 0; o < u; ++o) {
            const float* wo = w.data() + o * d;
            float acc = 0.0f;
            for (std::size_t k = 0; k < d; ++k) acc += xi[k] * wo[k];
            y[i * u + o] = acc + b[o];
        }
    }
    return y;
}

FcGrads fc_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w) {
    require_shape(x, {0, 0}, "fc_backward input");
    const std::size_t n = x.dim(0), d = x.dim(1);
    require_shape(w, {0, d}, "fc_backward weight");
    const std::size_t u = w.dim(0);
    require_shape(grad_y, {n, u}, "fc_backward gradient");
    FcGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({u})};
    for (std::size_t i = 0; i < n; ++i) {
        const float* xi = x.data() + i * d;
        float* gxi = g.grad_x.data() + i * d;
        for (std::size_t o = 0; o < u; ++o) {
            const float gy = grad_y[i * u + o];
            const float* wo = w.data() + o * d;
            float* gwo = g.grad_w.data() + o * d;
            for (std::size_t k = 0; k < d; ++k) {
                gxi[k] += gy * wo[k];
                gwo[k] += gy * xi[k];
            }
            g.grad_b[o] += gy;
        }
    }
    return g;
}

SoftmaxXent softmax_xent(const Tensor& logits, std::span<const std::uint8_t> labels) {
    require_shape(logits, {labels.size(), 0}, "softmax_xent");
    const std::size_t n = logits.dim(0), u = logits.dim(1);
    if (n == 0) throw InvalidArgument("softmax_xent: empty batch");
    SoftmaxXent r{0.0, Tensor(logits.shape())};
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= u) throw InvalidArgument("softmax_xent: label out of range");
        const float* z = logits.data() + i * u;
        const double zmax = *std::max_element(z, z + u);
        double denom = 0.0;
        for (std::size_t o = 0; o < u; ++o) denom += std::exp(static_cast<double>(z[o]) - zmax);
        for (std::size_t o = 0; o < u; ++o)
            r.probs[i * u + o] = static_cast<float>(std::exp(static_cast<double>(z[o]) - zmax) / denom);
        total += std::log(denom) - (static_cast<double>(z[labels[i]]) - zmax);
    }
    r.loss = total / static_cast<double>(n);
    return r;
}

Tensor softmax_xent_backward(const Tensor& probs, std::span<const std::uint8_t> labels) {
    require_shape(probs, {labels.size(), 0}, "softmax_xent_backward");
    const std::size_t n = probs.dim(0), u = probs.dim(1);
    Tensor g(probs.shape());
    const float inv_n = 1.0f / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < u; ++o)
            g[i * u + o] = (probs[i * u + o] - (labels[i] == o ? 1.0f : 0.0f)) * inv_n;
    return g;
}

}  // namespace rfprint::nn
