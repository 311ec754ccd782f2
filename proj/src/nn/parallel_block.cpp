#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>
#include <vector>

#include "conv_shapes.hpp"
#include "gemm_conv.hpp"
#include "rfprint/error.hpp"
#include "rfprint/nn/block.hpp"

namespace rfprint::nn::parallel {

namespace {

// Normalized activation before ReLU: s * z + t with s = gamma * inv_std,
// t = beta - s * mean. Forward and backward both go through this so they
// agree on ReLU masks and pooling winners.
inline float affine(float z, float s, float t) { return s * z + t; }

std::size_t pooled_width(std::size_t width, const BlockSpec& spec) {
    const std::size_t out = spec.avg_window != 0 ? width / spec.avg_window : width / 2;
    if (out == 0) throw ShapeMismatch("block: width " + std::to_string(width) + " is too small for pooling");
    return out;
}

// One row: ReLU(affine(z)) pooled into out.
void pool_row(const float* z, std::size_t width, float s, float t, const BlockSpec& spec, float* out) {
    if (spec.avg_window != 0) {
        const std::size_t win = spec.avg_window;
        const float scale = 1.0f / static_cast<float>(win);
        for (std::size_t j = 0; j < width / win; ++j) {
            float acc = 0.0f;
            for (std::size_t k = 0; k < win; ++k) acc += std::max(affine(z[j * win + k], s, t), 0.0f);
            out[j] = acc * scale;
        }
    } else {
        for (std::size_t j = 0; j < width / 2; ++j)
            out[j] = std::max(std::max(affine(z[2 * j], s, t), 0.0f), std::max(affine(z[2 * j + 1], s, t), 0.0f));
    }
}

// One row: gradient w.r.t. the batch-norm output given the gradient of
// the pooled output. Max pooling routes to the first maximum.
void row_grad(const float* z, const float* g_out, std::size_t width, float s, float t, const BlockSpec& spec,
              float* dy) {
    if (spec.avg_window != 0) {
        const std::size_t win = spec.avg_window;
        const std::size_t w_out = width / win;
        const float scale = 1.0f / static_cast<float>(win);
        for (std::size_t j = 0; j < w_out; ++j) {
            const float g = g_out[j] * scale;
            for (std::size_t k = 0; k < win; ++k) dy[j * win + k] = affine(z[j * win + k], s, t) > 0.0f ? g : 0.0f;
        }
        for (std::size_t i = w_out * win; i < width; ++i) dy[i] = 0.0f;
    } else {
        const std::size_t w_out = width / 2;
        for (std::size_t j = 0; j < w_out; ++j) {
            const float y0 = std::max(affine(z[2 * j], s, t), 0.0f);
            const float y1 = std::max(affine(z[2 * j + 1], s, t), 0.0f);
            const bool second = y1 > y0;
            const float g = (second ? y1 : y0) > 0.0f ? g_out[j] : 0.0f;
            dy[2 * j] = second ? 0.0f : g;
            dy[2 * j + 1] = second ? g : 0.0f;
        }
        if (width % 2 != 0) dy[width - 1] = 0.0f;
    }
}

struct ChannelAffine {
    std::vector<float> s, t;
};

}  // namespace

Tensor block_forward_train(Tensor x, ConvBlock& p, const BlockSpec& spec, BlockCache& cache) {
    const auto d = detail::conv_dims(x, p.weight);
    require_shape(p.bias, {d.f}, "conv bias");
    detail::require_channel_params(d.f, {&p.gamma, &p.beta, &p.running_mean, &p.running_var});
    const std::size_t rw = d.r * d.w;
    const std::size_t m = d.n * rw;
    if (m < 2) throw InvalidArgument("batchnorm: training needs at least two values per channel");
    const std::size_t pad = conv_pad_left(d.k);
    const std::size_t w_out = pooled_width(d.w, spec);

    cache.input = std::move(x);
    cache.z = Tensor({d.n, d.f, d.r, d.w});
    // Per-sample, per-channel mean and sum of squared deviations, merged
    // below in sample order.
    std::vector<double> s_mean(d.n * d.f), s_m2(d.n * d.f);
    const auto sn = static_cast<std::ptrdiff_t>(d.n);
#pragma omp parallel
    {
        std::vector<float> cols(d.c * d.k * rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t sni = 0; sni < sn; ++sni) {
            const auto n = static_cast<std::size_t>(sni);
            float* z = cache.z.data() + n * d.f * rw;
            detail::conv_sample(cache.input.data() + n * d.c * rw, d.c, d.r, d.w, p.weight.data(), d.f, d.k, pad,
                                p.bias.data(), z, cols.data());
            for (std::size_t f = 0; f < d.f; ++f) {
                const float* row = z + f * rw;
                const float mean = detail::sum(row, rw) / static_cast<float>(rw);
                float m2 = 0.0f;
#pragma omp simd reduction(+ : m2)
                for (std::size_t i = 0; i < rw; ++i) m2 += (row[i] - mean) * (row[i] - mean);
                s_mean[n * d.f + f] = mean;
                s_m2[n * d.f + f] = m2;
            }
        }
    }

    cache.mean.assign(d.f, 0.0f);
    cache.inv_std.assign(d.f, 0.0f);
    ChannelAffine a{std::vector<float>(d.f), std::vector<float>(d.f)};
    const BatchNormConfig& bn = spec.batchnorm;
    for (std::size_t f = 0; f < d.f; ++f) {
        double count = 0.0, mean = 0.0, m2 = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            const auto nb = static_cast<double>(rw);
            const double delta = s_mean[n * d.f + f] - mean;
            const double total = count + nb;
            mean += delta * nb / total;
            m2 += s_m2[n * d.f + f] + delta * delta * count * nb / total;
            count = total;
        }
        const double inv_std = 1.0 / std::sqrt(m2 / static_cast<double>(m) + bn.epsilon);
        cache.mean[f] = static_cast<float>(mean);
        cache.inv_std[f] = static_cast<float>(inv_std);
        a.s[f] = p.gamma[f] * cache.inv_std[f];
        a.t[f] = p.beta[f] - a.s[f] * cache.mean[f];
        p.running_mean[f] = static_cast<float>((1.0 - bn.momentum) * p.running_mean[f] + bn.momentum * mean);
        p.running_var[f] = static_cast<float>((1.0 - bn.momentum) * p.running_var[f] +
                                              bn.momentum * m2 / static_cast<double>(m - 1));
    }

    Tensor out({d.n, d.f, d.r, w_out});
    const auto rows = static_cast<std::ptrdiff_t>(d.n * d.f * d.r);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const auto ur = static_cast<std::size_t>(row);
        const std::size_t f = (ur / d.r) % d.f;
        pool_row(cache.z.data() + ur * d.w, d.w, a.s[f], a.t[f], spec, out.data() + ur * w_out);
    }
    return out;
}

Tensor block_forward_infer(const Tensor& x, const ConvBlock& p, const BlockSpec& spec) {
    const auto d = detail::conv_dims(x, p.weight);
    require_shape(p.bias, {d.f}, "conv bias");
    detail::require_channel_params(d.f, {&p.gamma, &p.beta, &p.running_mean, &p.running_var});
    const std::size_t rw = d.r * d.w;
    const std::size_t pad = conv_pad_left(d.k);
    const std::size_t w_out = pooled_width(d.w, spec);
    ChannelAffine a{std::vector<float>(d.f), std::vector<float>(d.f)};
    for (std::size_t f = 0; f < d.f; ++f) {
        a.s[f] = static_cast<float>(p.gamma[f] /
                                    std::sqrt(static_cast<double>(p.running_var[f]) + spec.batchnorm.epsilon));
        a.t[f] = p.beta[f] - a.s[f] * p.running_mean[f];
    }
    Tensor out({d.n, d.f, d.r, w_out});
    const auto sn = static_cast<std::ptrdiff_t>(d.n);
#pragma omp parallel
    {
        std::vector<float> cols(d.c * d.k * rw), z(d.f * rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t sni = 0; sni < sn; ++sni) {
            const auto n = static_cast<std::size_t>(sni);
            detail::conv_sample(x.data() + n * d.c * rw, d.c, d.r, d.w, p.weight.data(), d.f, d.k, pad, p.bias.data(),
                                z.data(), cols.data());
            for (std::size_t f = 0; f < d.f; ++f)
                for (std::size_t r = 0; r < d.r; ++r)
                    pool_row(z.data() + (f * d.r + r) * d.w, d.w, a.s[f], a.t[f], spec,
                             out.data() + ((n * d.f + f) * d.r + r) * w_out);
        }
    }
    return out;
}

BlockGrads block_backward(const Tensor& grad_out, const ConvBlock& p, const BlockSpec& spec, const BlockCache& cache,
                          bool need_grad_x) {
    const auto d = detail::conv_dims(cache.input, p.weight);
    const std::size_t w_out = pooled_width(d.w, spec);
    require_shape(grad_out, {d.n, d.f, d.r, w_out}, "block_backward gradient");
    require_shape(cache.z, {d.n, d.f, d.r, d.w}, "block_backward cached conv output");
    if (cache.mean.size() != d.f || cache.inv_std.size() != d.f)
        throw ShapeMismatch("block_backward: cache does not come from a parallel train forward");
    const std::size_t rw = d.r * d.w;
    const std::size_t ck = d.c * d.k;
    const std::size_t pad = conv_pad_left(d.k);
    const auto m = static_cast<double>(d.n * rw);

    ChannelAffine a{std::vector<float>(d.f), std::vector<float>(d.f)};
    for (std::size_t f = 0; f < d.f; ++f) {
        a.s[f] = p.gamma[f] * cache.inv_std[f];
        a.t[f] = p.beta[f] - a.s[f] * cache.mean[f];
    }

    // Writes dy for sample n, channel f into dy (rw floats); returns sums
    // of dy and dy * x_hat.
    auto channel_grad = [&](std::size_t n, std::size_t f, float* dy) {
        const float* z = cache.z.data() + (n * d.f + f) * rw;
        const float* g = grad_out.data() + (n * d.f + f) * d.r * w_out;
        for (std::size_t r = 0; r < d.r; ++r) row_grad(z + r * d.w, g + r * w_out, d.w, a.s[f], a.t[f], spec, dy + r * d.w);
        const float mean = cache.mean[f], inv = cache.inv_std[f];
        float sg = 0.0f, sgx = 0.0f;
#pragma omp simd reduction(+ : sg, sgx)
        for (std::size_t i = 0; i < rw; ++i) {
            sg += dy[i];
            sgx += dy[i] * ((z[i] - mean) * inv);
        }
        return std::pair<double, double>(sg, sgx);
    };

    // Pass 1: batch-norm reductions.
    std::vector<double> s_g(d.n * d.f), s_gx(d.n * d.f);
    const auto sn = static_cast<std::ptrdiff_t>(d.n);
#pragma omp parallel
    {
        std::vector<float> dy(rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t sni = 0; sni < sn; ++sni) {
            const auto n = static_cast<std::size_t>(sni);
            for (std::size_t f = 0; f < d.f; ++f) std::tie(s_g[n * d.f + f], s_gx[n * d.f + f]) = channel_grad(n, f, dy.data());
        }
    }
    BlockGrads out;
    out.grad_gamma = Tensor({d.f});
    out.grad_beta = Tensor({d.f});
    std::vector<float> mean_g(d.f), mean_gx(d.f);
    for (std::size_t f = 0; f < d.f; ++f) {
        double sg = 0.0, sgx = 0.0;
        for (std::size_t n = 0; n < d.n; ++n) {
            sg += s_g[n * d.f + f];
            sgx += s_gx[n * d.f + f];
        }
        out.grad_beta[f] = static_cast<float>(sg);
        out.grad_gamma[f] = static_cast<float>(sgx);
        mean_g[f] = static_cast<float>(sg / m);
        mean_gx[f] = static_cast<float>(sgx / m);
    }

    // Pass 2: conv-output gradient per sample, then the conv backward for
    // that sample while it is still in cache.
    if (need_grad_x) out.grad_x = Tensor(cache.input.shape());
    std::vector<float> wt(d.c * d.f * d.k);
    detail::flip_transpose(p.weight.data(), d.f, d.c, d.k, wt.data());
    const std::size_t chunks = (d.n + detail::kGradChunk - 1) / detail::kGradChunk;
    std::vector<float> partial_w(chunks * d.f * ck, 0.0f);
    std::vector<double> partial_b(chunks * d.f, 0.0);
    const auto schunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel
    {
        std::vector<float> dz(d.f * rw);
        std::vector<float> cols(std::max(d.c, d.f) * d.k * rw);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ch = 0; ch < schunks; ++ch) {
            const auto uch = static_cast<std::size_t>(ch);
            const std::size_t end = std::min(d.n, (uch + 1) * detail::kGradChunk);
            for (std::size_t n = uch * detail::kGradChunk; n < end; ++n) {
                for (std::size_t f = 0; f < d.f; ++f) {
                    float* row = dz.data() + f * rw;
                    channel_grad(n, f, row);
                    const float* z = cache.z.data() + (n * d.f + f) * rw;
                    const float mean = cache.mean[f], inv = cache.inv_std[f];
                    const float scale = p.gamma[f] * inv, mg = mean_g[f], mgx = mean_gx[f];
                    for (std::size_t i = 0; i < rw; ++i) row[i] = scale * (row[i] - mg - ((z[i] - mean) * inv) * mgx);
                    partial_b[uch * d.f + f] += detail::sum(row, rw);
                }
                if (need_grad_x)
                    detail::conv_sample(dz.data(), d.f, d.r, d.w, wt.data(), d.c, d.k, d.k - 1 - pad, nullptr,
                                        out.grad_x.data() + n * d.c * rw, cols.data());
                detail::accumulate_grad_w(dz.data(), cache.input.data() + n * d.c * rw, d.c, d.r, d.w, d.f, d.k, pad,
                                          partial_w.data() + uch * d.f * ck, cols.data());
            }
        }
    }
    out.grad_w = Tensor(p.weight.shape());
    out.grad_b = Tensor({d.f});
    for (std::size_t ch = 0; ch < chunks; ++ch) {
        const float* pw = partial_w.data() + ch * d.f * ck;
        for (std::size_t i = 0; i < d.f * ck; ++i) out.grad_w[i] += pw[i];
    }
    for (std::size_t f = 0; f < d.f; ++f) {
        double b = 0.0;
        for (std::size_t ch = 0; ch < chunks; ++ch) b += partial_b[ch * d.f + f];
        out.grad_b[f] = static_cast<float>(b);
    }
    return out;
}

}  // namespace rfprint::nn::parallel
