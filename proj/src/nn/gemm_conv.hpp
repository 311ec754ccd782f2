#pragma once

// Per-sample convolution building blocks shared by the parallel kernels.

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>

namespace rfprint::nn::detail {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

inline Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Samples per partial weight-gradient sum. Fixed so that the reduction
// order, and with it every bit of the result, ignores the thread count.
inline constexpr std::size_t kGradChunk = 4;

// cols[(c, k), (r, o)] = x[c, r, o + k - pad], zero outside the row.
inline void im2col(const float* x, std::size_t c_in, std::size_t rows, std::size_t width, std::size_t kernel,
                   std::size_t pad, float* cols) {
    const std::size_t rw = rows * width;
    for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t k = 0; k < kernel; ++k) {
            float* dst = cols + (c * kernel + k) * rw;
            const std::size_t lo = pad > k ? pad - k : 0;
            const std::size_t hi = width + pad > k ? std::min(width, width + pad - k) : 0;
            for (std::size_t r = 0; r < rows; ++r) {
                const float* src = x + (c * rows + r) * width;
                float* out = dst + r * width;
                for (std::size_t o = 0; o < lo; ++o) out[o] = 0.0f;
                for (std::size_t o = lo; o < hi; ++o) out[o] = src[o + k - pad];
                for (std::size_t o = hi; o < width; ++o) out[o] = 0.0f;
            }
        }
}

// y = wmat * im2col(x) (+ bias) for one sample; wmat is F x (C * K) and
// cols must hold C * K * rows * width floats.
inline void conv_sample(const float* x, std::size_t c_in, std::size_t rows, std::size_t width, const float* wmat,
                        std::size_t filters, std::size_t kernel, std::size_t pad, const float* bias, float* y,
                        float* cols) {
    const std::size_t rw = rows * width;
    const std::size_t ck = c_in * kernel;
    im2col(x, c_in, rows, width, kernel, pad, cols);
    MatrixMap out(y, idx(filters), idx(rw));
    out.noalias() = ConstMatrixMap(wmat, idx(filters), idx(ck)) * ConstMatrixMap(cols, idx(ck), idx(rw));
    if (bias != nullptr)
        for (std::size_t f = 0; f < filters; ++f) {
            float* row = y + f * rw;
            const float b = bias[f];
            for (std::size_t i = 0; i < rw; ++i) row[i] += b;
        }
}

// gw (F x C*K) += gy (F x RW) * im2col(x)^T for one sample.
inline void accumulate_grad_w(const float* gy, const float* x, std::size_t c_in, std::size_t rows, std::size_t width,
                              std::size_t filters, std::size_t kernel, std::size_t pad, float* gw, float* cols) {
    const std::size_t rw = rows * width;
    const std::size_t ck = c_in * kernel;
    im2col(x, c_in, rows, width, kernel, pad, cols);
    MatrixMap acc(gw, idx(filters), idx(ck));
    acc.noalias() += ConstMatrixMap(gy, idx(filters), idx(rw)) * ConstMatrixMap(cols, idx(ck), idx(rw)).transpose();
}

// Kernel for the input gradient: wt[c, f, j] = w[f, c, K - 1 - j].
inline void flip_transpose(const float* w, std::size_t filters, std::size_t c_in, std::size_t kernel, float* wt) {
    for (std::size_t f = 0; f < filters; ++f)
        for (std::size_t c = 0; c < c_in; ++c)
            for (std::size_t j = 0; j < kernel; ++j)
                wt[(c * filters + f) * kernel + j] = w[(f * c_in + c) * kernel + (kernel - 1 - j)];
}

inline float sum(const float* p, std::size_t n) {
    float s = 0.0f;
#pragma omp simd reduction(+ : s)
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
}

}  // namespace rfprint::nn::detail
