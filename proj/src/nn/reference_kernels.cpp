#include <cmath>

#include "conv_shapes.hpp"
#include "rfprint/error.hpp"
#include "rfprint/nn/kernels.hpp"

namespace rfprint::nn::reference {

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const auto d = detail::conv_dims(x, w);
    require_shape(b, {d.f}, "conv bias");
    const auto pad = static_cast<std::ptrdiff_t>(conv_pad_left(d.k));
    Tensor y({d.n, d.f, d.r, d.w});
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t f = 0; f < d.f; ++f)
            for (std::size_t r = 0; r < d.r; ++r)
                for (std::size_t o = 0; o < d.w; ++o) {
                    double acc = b[f];
                    for (std::size_t c = 0; c < d.c; ++c)
                        for (std::size_t k = 0; k < d.k; ++k) {
                            const auto j = static_cast<std::ptrdiff_t>(o + k) - pad;
                            if (j < 0 || j >= static_cast<std::ptrdiff_t>(d.w)) continue;
                            acc += static_cast<double>(w[(f * d.c + c) * d.k + k]) *
                                   x[((n * d.c + c) * d.r + r) * d.w + static_cast<std::size_t>(j)];
                        }
                    y[((n * d.f + f) * d.r + r) * d.w + o] = static_cast<float>(acc);
                }
    return y;
}

ConvGrads conv_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w) {
    const auto d = detail::conv_dims(x, w);
    require_shape(grad_y, {d.n, d.f, d.r, d.w}, "conv_backward gradient");
    const auto pad = static_cast<std::ptrdiff_t>(conv_pad_left(d.k));
    std::vector<double> gx(x.size(), 0.0), gw(w.size(), 0.0), gb(d.f, 0.0);
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t f = 0; f < d.f; ++f)
            for (std::size_t r = 0; r < d.r; ++r)
                for (std::size_t o = 0; o < d.w; ++o) {
                    const double g = grad_y[((n * d.f + f) * d.r + r) * d.w + o];
                    gb[f] += g;
                    for (std::size_t c = 0; c < d.c; ++c)
                        for (std::size_t k = 0; k < d.k; ++k) {
                            const auto j = static_cast<std::ptrdiff_t>(o + k) - pad;
                            if (j < 0 || j >= static_cast<std::ptrdiff_t>(d.w)) continue;
                            const std::size_t xi = ((n * d.c + c) * d.r + r) * d.w + static_cast<std::size_t>(j);
                            const std::size_t wi = (f * d.c + c) * d.k + k;
                            gx[xi] += g * w[wi];
                            gw[wi] += g * x[xi];
                        }
                }
    ConvGrads out{Tensor(x.shape()), Tensor(w.shape()), Tensor({d.f})};
    for (std::size_t i = 0; i < gx.size(); ++i) out.grad_x[i] = static_cast<float>(gx[i]);
    for (std::size_t i = 0; i < gw.size(); ++i) out.grad_w[i] = static_cast<float>(gw[i]);
    for (std::size_t i = 0; i < gb.size(); ++i) out.grad_b[i] = static_cast<float>(gb[i]);
    return out;
}

Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                       Tensor& running_var, const BatchNormConfig& cfg, BatchNormCache& cache) {
    const auto d = detail::channel_dims(x, "batchnorm input");
    detail::require_channel_params(d.c, {&gamma, &beta, &running_mean, &running_var});
    const std::size_t m = d.n * d.inner;
    if (m < 2) throw InvalidArgument("batchnorm: training needs at least two values per channel");
    Tensor y(x.shape());
    cache.x_hat = Tensor(x.shape());
    cache.inv_std.assign(d.c, 0.0f);
    for (std::size_t c = 0; c < d.c; ++c) {
        double sum = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < d.inner; ++i) sum += x[(n * d.c + c) * d.inner + i];
        const double mean = sum / static_cast<double>(m);
        double sq = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < d.inner; ++i) {
                const double dv = x[(n * d.c + c) * d.inner + i] - mean;
                sq += dv * dv;
            }
        const double var = sq / static_cast<double>(m);
        const double inv_std = 1.0 / std::sqrt(var + cfg.epsilon);
        cache.inv_std[c] = static_cast<float>(inv_std);
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < d.inner; ++i) {
                const std::size_t at = (n * d.c + c) * d.inner + i;
                const auto xh = static_cast<float>((x[at] - mean) * inv_std);
                cache.x_hat[at] = xh;
                y[at] = gamma[c] * xh + beta[c];
            }
        const double unbiased = sq / static_cast<double>(m - 1);
        running_mean[c] = static_cast<float>((1.0 - cfg.momentum) * running_mean[c] + cfg.momentum * mean);
        running_var[c] = static_cast<float>((1.0 - cfg.momentum) * running_var[c] + cfg.momentum * unbiased);
    }
    return y;
}

Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& running_mean,
                       const Tensor& running_var, float epsilon) {
    const auto d = detail::channel_dims(x, "batchnorm input");
    detail::require_channel_params(d.c, {&gamma, &beta, &running_mean, &running_var});
    Tensor y(x.shape());
    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t c = 0; c < d.c; ++c) {
            const double inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + epsilon);
            for (std::size_t i = 0; i < d.inner; ++i) {
                const std::size_t at = (n * d.c + c) * d.inner + i;
                y[at] = static_cast<float>(gamma[c] * (x[at] - running_mean[c]) * inv_std + beta[c]);
            }
        }
    return y;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache) {
    require_same_shape(grad_y, cache.x_hat, "batchnorm_backward");
    const auto d = detail::channel_dims(grad_y, "batchnorm gradient");
    require_shape(gamma, {d.c}, "batchnorm gamma");
    const auto m = static_cast<double>(d.n * d.inner);
    BatchNormGrads g{Tensor(grad_y.shape()), Tensor({d.c}), Tensor({d.c})};
    for (std::size_t c = 0; c < d.c; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < d.inner; ++i) {
                const std::size_t at = (n * d.c + c) * d.inner + i;
                sum_g += grad_y[at];
                sum_gx += static_cast<double>(grad_y[at]) * cache.x_hat[at];
            }
        g.grad_beta[c] = static_cast<float>(sum_g);
        g.grad_gamma[c] = static_cast<float>(sum_gx);
        const double scale = gamma[c] * cache.inv_std[c] / m;
        for (std::size_t n = 0; n < d.n; ++n)
            for (std::size_t i = 0; i < d.inner; ++i) {
                const std::size_t at = (n * d.c + c) * d.inner + i;
                g.grad_x[at] = static_cast<float>(scale * (m * grad_y[at] - sum_g - cache.x_hat[at] * sum_gx));
            }
    }
    return g;
}

}  // namespace rfprint::nn::reference
