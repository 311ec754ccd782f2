#pragma once
// Central finite-difference gradient checks shared by the unit tests and
// the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rfprint/nn/block.hpp"
#include "rfprint/nn/kernels.hpp"
#include "rfprint/nn/model.hpp"

namespace gradcheck {

using rfprint::nn::Tensor;

inline Tensor random_tensor(rfprint::nn::Shape shape, std::uint64_t seed, float scale = 1.0f) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, scale);
    for (auto& v : t.values()) v = g(rng);
    return t;
}

/// Values bounded away from zero by `margin`, so a ReLU kink is never
/// crossed by a finite-difference step.
inline Tensor away_from_zero(rfprint::nn::Shape shape, std::uint64_t seed, float margin) {
    Tensor t = random_tensor(std::move(shape), seed);
    for (auto& v : t.values()) v = v >= 0.0f ? v + margin : v - margin;
    return t;
}

/// Pairs along the width that differ by at least `margin`, so max pooling
/// keeps its winner under a finite-difference step.
inline Tensor separated_pairs(rfprint::nn::Shape shape, std::uint64_t seed, float margin) {
    Tensor t = random_tensor(std::move(shape), seed);
    for (std::size_t i = 0; i + 1 < t.size(); i += 2)
        if (std::abs(t[i] - t[i + 1]) < margin) t[i + 1] = t[i] + (t[i + 1] >= t[i] ? margin : -margin);
    return t;
}

/// sum_i y_i r_i in double.
inline double project(const Tensor& y, const Tensor& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * r[i];
    return s;
}

/// Largest deviation between `analytic` and the central difference of
/// `loss` w.r.t. each element of `t`, relative to the largest gradient
/// magnitude seen.
inline double relative_error(Tensor& t, const Tensor& analytic, const std::function<double()>& loss,
                             float step = 1e-2f) {
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const float orig = t[i];
        const float up = orig + step, down = orig - step;
        t[i] = up;
        const double lp = loss();
        t[i] = down;
        const double lm = loss();
        t[i] = orig;
        const double numeric = (lp - lm) / (static_cast<double>(up) - down);
        worst = std::max(worst, std::abs(numeric - analytic[i]));
        scale = std::max({scale, std::abs(numeric), std::abs(static_cast<double>(analytic[i]))});
    }
    return scale > 0.0 ? worst / scale : worst;
}

struct Result {
    std::string name;
    double error;
};

namespace detail {

template <class Fwd, class Bwd>
std::vector<Result> conv_checks(const char* tag, Fwd fwd, Bwd bwd) {
    Tensor x = random_tensor({1, 1, 2, 8}, 1);
    Tensor w = random_tensor({2, 1, 1, 4}, 2);
    Tensor b = random_tensor({2}, 3);
    const Tensor r = random_tensor({1, 2, 2, 8}, 4);
    const auto g = bwd(r, x, w);
    auto loss = [&] { return project(fwd(x, w, b), r); };
    std::vector<Result> out;
    out.push_back({std::string(tag) + " conv grad_x", relative_error(x, g.grad_x, loss)});
    out.push_back({std::string(tag) + " conv grad_w", relative_error(w, g.grad_w, loss)});
    out.push_back({std::string(tag) + " conv grad_b", relative_error(b, g.grad_b, loss)});

    Tensor x3 = random_tensor({3, 2, 2, 9}, 5);
    Tensor w3 = random_tensor({3, 2, 1, 4}, 6);
    Tensor b3 = random_tensor({3}, 7);
    const Tensor r3 = random_tensor({3, 3, 2, 9}, 8);
    const auto g3 = bwd(r3, x3, w3);
    auto loss3 = [&] { return project(fwd(x3, w3, b3), r3); };
    out.push_back({std::string(tag) + " conv grad_x (multi-channel)", relative_error(x3, g3.grad_x, loss3)});
    out.push_back({std::string(tag) + " conv grad_w (multi-channel)", relative_error(w3, g3.grad_w, loss3)});
    return out;
}

template <class Train, class Bwd>
std::vector<Result> bn_checks(const char* tag, Train train, Bwd bwd) {
    using namespace rfprint::nn;
    Tensor x = random_tensor({4, 3, 2, 5}, 11, 2.0f);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += static_cast<float>(i % 3);
    Tensor gamma = random_tensor({3}, 12);
    Tensor beta = random_tensor({3}, 13);
    const Tensor r = random_tensor({4, 3, 2, 5}, 14);
    const BatchNormConfig cfg;
    auto run = [&](BatchNormCache& cache) {
        Tensor rm({3}), rv({3}, 1.0f);
        return train(x, gamma, beta, rm, rv, cfg, cache);
    };
    BatchNormCache cache;
    run(cache);
    const auto g = bwd(r, gamma, cache);
    auto loss = [&] {
        BatchNormCache c;
        return project(run(c), r);
    };
    return {{std::string(tag) + " batchnorm grad_x", relative_error(x, g.grad_x, loss)},
            {std::string(tag) + " batchnorm grad_gamma", relative_error(gamma, g.grad_gamma, loss)},
            {std::string(tag) + " batchnorm grad_beta", relative_error(beta, g.grad_beta, loss)}};
}

template <class Ns>
std::vector<Result> block_checks(const char* tag, std::size_t avg_window, bool need_x) {
    using namespace rfprint::nn;
    ConvBlock p;
    p.weight = random_tensor({3, 2, 1, 4}, 21, 0.5f);
    p.bias = random_tensor({3}, 22);
    p.gamma = random_tensor({3}, 23);
    for (auto& v : p.gamma.values()) v = 1.0f + 0.3f * v;
    p.beta = random_tensor({3}, 24);
    p.running_mean = Tensor({3});
    p.running_var = Tensor({3}, 1.0f);
    const BlockSpec spec{avg_window, {}};
    // Pick an input whose pre-ReLU activations all sit clear of zero.
    Tensor x;
    for (std::uint64_t seed = 25;; ++seed) {
        x = random_tensor({3, 2, 2, 8}, seed);
        Tensor rm({3}), rv({3}, 1.0f);
        BatchNormCache bc;
        const Tensor z = reference::batchnorm_train(reference::conv_forward(x, p.weight, p.bias), p.gamma, p.beta,
                                                    rm, rv, spec.batchnorm, bc);
        float nearest = 1e9f;
        for (float v : z.values()) nearest = std::min(nearest, std::abs(v));
        if (nearest > 0.02f) break;
    }
    const std::size_t w_out = avg_window ? 8 / avg_window : 4;
    const Tensor r = random_tensor({3, 3, 2, w_out}, 26);
    auto loss = [&] {
        ConvBlock q = p;
        BlockCache c;
        return project(Ns::block_forward_train(x, q, spec, c), r);
    };
    ConvBlock q = p;
    BlockCache cache;
    Ns::block_forward_train(x, q, spec, cache);
    const auto g = Ns::block_backward(r, p, spec, cache, need_x);
    // Max-pool winners are not separated here, so the step stays small.
    const float step = 3e-3f;
    const std::string name = std::string(tag) + (avg_window ? " block (avg pool)" : " block (max pool)");
    std::vector<Result> out{{name + " grad_w", relative_error(p.weight, g.grad_w, loss, step)},
                            {name + " grad_gamma", relative_error(p.gamma, g.grad_gamma, loss, step)},
                            {name + " grad_beta", relative_error(p.beta, g.grad_beta, loss, step)}};
    if (need_x) out.push_back({name + " grad_x", relative_error(x, g.grad_x, loss, step)});
    return out;
}

struct RefNs {
    template <class... A>
    static auto block_forward_train(A&&... a) { return rfprint::nn::reference::block_forward_train(std::forward<A>(a)...); }
    template <class... A>
    static auto block_backward(A&&... a) { return rfprint::nn::reference::block_backward(std::forward<A>(a)...); }
};
struct ParNs {
    template <class... A>
    static auto block_forward_train(A&&... a) { return rfprint::nn::parallel::block_forward_train(std::forward<A>(a)...); }
    template <class... A>
    static auto block_backward(A&&... a) { return rfprint::nn::parallel::block_backward(std::forward<A>(a)...); }
};

}  // namespace detail

/// Every layer's backward against central differences.
inline std::vector<Result> all_layer_checks() {
    using namespace rfprint::nn;
    std::vector<Result> out;
    auto append = [&](std::vector<Result> v) { out.insert(out.end(), v.begin(), v.end()); };

    append(detail::conv_checks("reference", reference::conv_forward, reference::conv_backward));
    append(detail::conv_checks("parallel", parallel::conv_forward, parallel::conv_backward));
    append(detail::bn_checks("reference", reference::batchnorm_train, reference::batchnorm_backward));
    append(detail::bn_checks("parallel", parallel::batchnorm_train, parallel::batchnorm_backward));

    {
        Tensor x = away_from_zero({2, 2, 2, 6}, 31, 0.05f);
        const Tensor r = random_tensor(x.shape(), 32);
        const Tensor g = relu_backward(r, relu(x));
        out.push_back({"relu", relative_error(x, g, [&] { return project(relu(x), r); })});
    }
    {
        Tensor x = separated_pairs({2, 2, 2, 8}, 33, 0.05f);
        const Tensor r = random_tensor({2, 2, 2, 4}, 34);
        const auto p = maxpool_1x2(x);
        const Tensor g = maxpool_1x2_backward(r, p.argmax, x.shape());
        out.push_back({"maxpool 1x2", relative_error(x, g, [&] { return project(maxpool_1x2(x).y, r); })});
    }
    {
        Tensor x = random_tensor({2, 3, 2, 12}, 35);
        const Tensor r = random_tensor({2, 3, 2, 3}, 36);
        const Tensor g = avgpool_width_backward(r, 4, x.shape());
        out.push_back({"avgpool", relative_error(x, g, [&] { return project(avgpool_width(x, 4), r); })});
    }
    {
        Tensor x = random_tensor({4, 10}, 37);
        const Tensor r = random_tensor({4, 10}, 38);
        std::vector<float> mask;
        rfprint::Rng rng(39);
        dropout_train(x, 0.5f, rng, mask);
        const Tensor g = dropout_backward(r, mask);
        auto loss = [&] {
            std::vector<float> m;
            rfprint::Rng again(39);
            return project(dropout_train(x, 0.5f, again, m), r);
        };
        out.push_back({"dropout", relative_error(x, g, loss)});
    }
    {
        Tensor x = random_tensor({3, 6}, 41);
        Tensor w = random_tensor({4, 6}, 42);
        Tensor b = random_tensor({4}, 43);
        const Tensor r = random_tensor({3, 4}, 44);
        const auto g = fc_backward(r, x, w);
        auto loss = [&] { return project(fc_forward(x, w, b), r); };
        out.push_back({"fc grad_x", relative_error(x, g.grad_x, loss)});
        out.push_back({"fc grad_w", relative_error(w, g.grad_w, loss)});
        out.push_back({"fc grad_b", relative_error(b, g.grad_b, loss)});
    }
    {
        Tensor logits = random_tensor({4, 5}, 45);
        const std::vector<std::uint8_t> labels{0, 3, 4, 1};
        const auto sx = softmax_xent(logits, labels);
        const Tensor g = softmax_xent_backward(sx.probs, labels);
        out.push_back({"softmax cross-entropy",
                       relative_error(logits, g, [&] { return softmax_xent(logits, labels).loss; })});
    }

    append(detail::block_checks<detail::RefNs>("reference", 0, true));
    append(detail::block_checks<detail::RefNs>("reference", 4, true));
    append(detail::block_checks<detail::ParNs>("parallel", 0, true));
    append(detail::block_checks<detail::ParNs>("parallel", 4, true));
    return out;
}

}  // namespace gradcheck
