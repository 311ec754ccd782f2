#include <cmath>
#include <vector>

#include "conv_shapes.hpp"
#include "gemm_conv.hpp"
#include "rfprint/error.hpp"
#include "rfprint/nn/kernels.hpp"

namespace rfprint::nn::parallel {

namespace {

using detail::kGradChunk;

// y[n] = wmat * im2col(x[n]) (+ bias) for every sample.
void conv_batch(const float* x, std::size_t batch, std::size_t c_in, std::size_t rows, std::size_t width,
                const float* wmat, std::size_t filters, std::size_t kernel, std::size_t pad, const float* bias,
                float* y) {
    const std::size_t rw = rows * width;
    const auto sn = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel
    {
        std::vector<float> cols(c_in * kernel * rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t n = 0; n < sn; ++n) {
            const auto un = static_cast<std::size_t>(n);
            detail::conv_sample(x + un * c_in * rw, c_in, rows, width, wmat, filters, kernel, pad, bias,
                                y + un * filters * rw, cols.data());
        }
    }
}

}  // namespace

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const auto d = detail::conv_dims(x, w);
    require_shape(b, {d.f}, "conv bias");
    Tensor y({d.n, d.f, d.r, d.w});
    conv_batch(x.data(), d.n, d.c, d.r, d.w, w.data(), d.f, d.k, conv_pad_left(d.k), b.data(), y.data());
    return y;
}

ConvGrads conv_backward(const Tensor& grad_y, const Tensor& x, const Tensor& w) {
    const auto d = detail::conv_dims(x, w);
    require_shape(grad_y, {d.n, d.f, d.r, d.w}, "conv_backward gradient");
    const std::size_t pad = conv_pad_left(d.k);
    const std::size_t rw = d.r * d.w;
    const std::size_t ck = d.c * d.k;
    ConvGrads out{Tensor(x.shape()), Tensor(w.shape()), Tensor({d.f})};

    // grad_x is the correlation of grad_y with the flipped, transposed
    // kernel: wt[c, f, j] = w[f, c, K - 1 - j], padded on the other side.
    std::vector<float> wt(d.c * d.f * d.k);
    detail::flip_transpose(w.data(), d.f, d.c, d.k, wt.data());
    conv_batch(grad_y.data(), d.n, d.f, d.r, d.w, wt.data(), d.c, d.k, d.k - 1 - pad, nullptr, out.grad_x.data());

    const std::size_t chunks = (d.n + kGradChunk - 1) / kGradChunk;
    std::vector<float> partial(chunks * d.f * ck, 0.0f);
    const auto schunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel
    {
        std::vector<float> cols(ck * rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ch = 0; ch < schunks; ++ch) {
            const auto uch = static_cast<std::size_t>(ch);
            const std::size_t end = std::min(d.n, (uch + 1) * kGradChunk);
            for (std::size_t n = uch * kGradChunk; n < end; ++n)
                detail::accumulate_grad_w(grad_y.data() + n * d.f * rw, x.data() + n * d.c * rw, d.c, d.r, d.w, d.f,
                                          d.k, pad, partial.data() + uch * d.f * ck, cols.data());
        }
    }
    float* gw = out.grad_w.data();
    for (std::size_t ch = 0; ch < chunks; ++ch) {
        const float* p = partial.data() + ch * d.f * ck;
        for (std::size_t i = 0; i < d.f * ck; ++i) gw[i] += p[i];
    }

    for (std::size_t n = 0; n < d.n; ++n)
        for (std::size_t f = 0; f < d.f; ++f) out.grad_b[f] += detail::sum(grad_y.data() + (n * d.f + f) * rw, rw);
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
    const auto sc = static_cast<std::ptrdiff_t>(d.c);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t sci = 0; sci < sc; ++sci) {
        const auto c = static_cast<std::size_t>(sci);
        double sum = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const float* p = x.data() + (n * d.c + c) * d.inner;
            sum += detail::sum(p, d.inner);
        }
        const double mean = sum / static_cast<double>(m);
        const auto meanf = static_cast<float>(mean);
        double sq = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const float* p = x.data() + (n * d.c + c) * d.inner;
            float s = 0.0f;
#pragma omp simd reduction(+ : s)
            for (std::size_t i = 0; i < d.inner; ++i) {
                const float dv = p[i] - meanf;
                s += dv * dv;
            }
            sq += s;
        }
        const double inv_std = 1.0 / std::sqrt(sq / static_cast<double>(m) + cfg.epsilon);
        const auto inv_stdf = static_cast<float>(inv_std);
        cache.inv_std[c] = inv_stdf;
        const float g = gamma[c], bt = beta[c];
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t base = (n * d.c + c) * d.inner;
            const float* p = x.data() + base;
            float* xh = cache.x_hat.data() + base;
            float* out = y.data() + base;
            for (std::size_t i = 0; i < d.inner; ++i) {
                xh[i] = (p[i] - meanf) * inv_stdf;
                out[i] = g * xh[i] + bt;
            }
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
    std::vector<float> scale(d.c), shift(d.c);
    for (std::size_t c = 0; c < d.c; ++c) {
        scale[c] = static_cast<float>(gamma[c] / std::sqrt(static_cast<double>(running_var[c]) + epsilon));
        shift[c] = beta[c] - scale[c] * running_mean[c];
    }
    Tensor y(x.shape());
    const auto rows = static_cast<std::ptrdiff_t>(d.n * d.c);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const std::size_t c = static_cast<std::size_t>(row) % d.c;
        const float* p = x.data() + static_cast<std::size_t>(row) * d.inner;
        float* out = y.data() + static_cast<std::size_t>(row) * d.inner;
        for (std::size_t i = 0; i < d.inner; ++i) out[i] = scale[c] * p[i] + shift[c];
    }
    return y;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& gamma, const BatchNormCache& cache) {
    require_same_shape(grad_y, cache.x_hat, "batchnorm_backward");
    const auto d = detail::channel_dims(grad_y, "batchnorm gradient");
    require_shape(gamma, {d.c}, "batchnorm gamma");
    const auto m = static_cast<double>(d.n * d.inner);
    BatchNormGrads g{Tensor(grad_y.shape()), Tensor({d.c}), Tensor({d.c})};
    const auto sc = static_cast<std::ptrdiff_t>(d.c);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t sci = 0; sci < sc; ++sci) {
        const auto c = static_cast<std::size_t>(sci);
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t base = (n * d.c + c) * d.inner;
            const float* gy = grad_y.data() + base;
            const float* xh = cache.x_hat.data() + base;
            float s = 0.0f, sx = 0.0f;
#pragma omp simd reduction(+ : s, sx)
            for (std::size_t i = 0; i < d.inner; ++i) {
                s += gy[i];
                sx += gy[i] * xh[i];
            }
            sum_g += s;
            sum_gx += sx;
        }
        g.grad_beta[c] = static_cast<float>(sum_g);
        g.grad_gamma[c] = static_cast<float>(sum_gx);
        const auto scale = gamma[c] * cache.inv_std[c];
        const auto mean_g = static_cast<float>(sum_g / m);
        const auto mean_gx = static_cast<float>(sum_gx / m);
        for (std::size_t n = 0; n < d.n; ++n) {
            const std::size_t base = (n * d.c + c) * d.inner;
            const float* gy = grad_y.data() + base;
            const float* xh = cache.x_hat.data() + base;
            float* gx = g.grad_x.data() + base;
            for (std::size_t i = 0; i < d.inner; ++i) gx[i] = scale * (gy[i] - mean_g - xh[i] * mean_gx);
        }
    }
    return g;
}

}  // namespace rfprint::nn::parallel
