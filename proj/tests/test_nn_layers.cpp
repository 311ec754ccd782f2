#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "rfprint/error.hpp"
#include "rfprint/nn/kernels.hpp"

using namespace rfprint;
using namespace rfprint::nn;
using gradcheck::random_tensor;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
    return d;
}

}  // namespace

TEST_CASE("every backward matches finite differences") {
    for (const auto& r : gradcheck::all_layer_checks()) {
        INFO(r.name);
        CHECK(r.error < 1e-3);
    }
}

TEST_CASE("conv examples") {
    const Tensor x({1, 1, 1, 4}, {1, 2, 3, 4});
    SUBCASE("delta kernel at the aligned tap") {
        const Tensor w({1, 1, 1, 4}, {0, 0, 1, 0});
        const Tensor y = reference::conv_forward(x, w, Tensor({1}));
        for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == x[i]);
        CHECK(parallel::conv_forward(x, w, Tensor({1})).values()[3] == 4.0f);
    }
    SUBCASE("box kernel") {
        const Tensor w({1, 1, 1, 4}, {1, 1, 1, 1});
        const float want[] = {3, 6, 10, 9};
        const Tensor yr = reference::conv_forward(x, w, Tensor({1}));
        const Tensor yp = parallel::conv_forward(x, w, Tensor({1}));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(yr[i] == want[i]);
            CHECK(yp[i] == want[i]);
        }
    }
    SUBCASE("rows share weights") {
        Tensor two({1, 1, 2, 6});
        for (std::size_t i = 0; i < 6; ++i) two[i] = two[6 + i] = static_cast<float>(i) - 2.5f;
        const Tensor w = random_tensor({3, 1, 1, 4}, 1);
        const Tensor y = reference::conv_forward(two, w, random_tensor({3}, 2));
        for (std::size_t f = 0; f < 3; ++f)
            for (std::size_t i = 0; i < 6; ++i) CHECK(y[f * 12 + i] == y[f * 12 + 6 + i]);
    }
    CHECK_THROWS_AS(reference::conv_forward(x, Tensor({1, 2, 1, 4}), Tensor({1})), ShapeMismatch);
}

TEST_CASE("conv backward basics") {
    const Tensor x = random_tensor({2, 2, 2, 7}, 3);
    const Tensor w = random_tensor({3, 2, 1, 4}, 4);
    const auto zero = reference::conv_backward(Tensor({2, 3, 2, 7}), x, w);
    for (float v : zero.grad_x.values()) CHECK(v == 0.0f);
    for (float v : zero.grad_w.values()) CHECK(v == 0.0f);
    for (float v : zero.grad_b.values()) CHECK(v == 0.0f);

    const Tensor gy = random_tensor({2, 3, 2, 7}, 5);
    const auto g = parallel::conv_backward(gy, x, w);
    for (std::size_t f = 0; f < 3; ++f) {
        double s = 0.0;
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t i = 0; i < 14; ++i) s += gy[(n * 3 + f) * 14 + i];
        CHECK(g.grad_b[f] == doctest::Approx(s).epsilon(1e-5));
    }
}

TEST_CASE("batchnorm") {
    const Tensor gamma({2}, 1.0f), beta({2}, 0.0f);
    const BatchNormConfig cfg;
    SUBCASE("standardizes per channel") {
        Tensor x = random_tensor({6, 2, 2, 5}, 6, 3.0f);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += (i / 10) % 2 ? 4.0f : -1.0f;
        Tensor rm({2}), rv({2}, 1.0f);
        BatchNormCache cache;
        const Tensor y = reference::batchnorm_train(x, gamma, beta, rm, rv, cfg, cache);
        for (std::size_t c = 0; c < 2; ++c) {
            double m = 0.0, v = 0.0;
            for (std::size_t n = 0; n < 6; ++n)
                for (std::size_t i = 0; i < 10; ++i) m += y[(n * 2 + c) * 10 + i];
            m /= 60.0;
            for (std::size_t n = 0; n < 6; ++n)
                for (std::size_t i = 0; i < 10; ++i) v += std::pow(y[(n * 2 + c) * 10 + i] - m, 2);
            v /= 60.0;
            CHECK(std::abs(m) < 1e-5);
            CHECK(std::abs(v - 1.0) < 1e-4);
        }
        CHECK(rm[0] != 0.0f);
        CHECK(rv[0] != 1.0f);
    }
    SUBCASE("standard input passes through") {
        Tensor x({2, 2, 1, 2}, {1, -1, 1, -1, -1, 1, -1, 1});
        Tensor rm({2}), rv({2}, 1.0f);
        BatchNormCache cache;
        const Tensor y = parallel::batchnorm_train(x, gamma, beta, rm, rv, cfg, cache);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-5);
    }
    SUBCASE("infer mode uses running statistics") {
        const Tensor x({1, 2, 1, 2}, {3, 5, 1, 1});
        const Tensor rm({2}, {4.0f, 0.0f}), rv({2}, {4.0f, 1.0f});
        const Tensor y = reference::batchnorm_infer(x, gamma, beta, rm, rv, 0.0f);
        CHECK(y[0] == doctest::Approx(-0.5));
        CHECK(y[1] == doctest::Approx(0.5));
        CHECK(y[2] == doctest::Approx(1.0));
        CHECK(max_abs_diff(y, parallel::batchnorm_infer(x, gamma, beta, rm, rv, 0.0f)) < 1e-6);
    }
    SUBCASE("degenerate batch") {
        Tensor x({1, 2, 1, 1});
        Tensor rm({2}), rv({2}, 1.0f);
        BatchNormCache cache;
        CHECK_THROWS_AS(reference::batchnorm_train(x, gamma, beta, rm, rv, cfg, cache), InvalidArgument);
        CHECK_THROWS_AS(parallel::batchnorm_train(x, gamma, beta, rm, rv, cfg, cache), InvalidArgument);
    }
}

TEST_CASE("reference and parallel kernels agree") {
    const Tensor x = random_tensor({5, 3, 2, 33}, 7);
    const Tensor w = random_tensor({4, 3, 1, 4}, 8);
    const Tensor b = random_tensor({4}, 9);
    const Tensor yr = reference::conv_forward(x, w, b);
    CHECK(max_abs_diff(yr, parallel::conv_forward(x, w, b)) < 1e-5);

    const Tensor gy = random_tensor(yr.shape(), 10);
    const auto gr = reference::conv_backward(gy, x, w);
    const auto gp = parallel::conv_backward(gy, x, w);
    CHECK(max_abs_diff(gr.grad_x, gp.grad_x) < 1e-5);
    CHECK(max_abs_diff(gr.grad_w, gp.grad_w) < 1e-4);
    CHECK(max_abs_diff(gr.grad_b, gp.grad_b) < 1e-4);

    const Tensor gamma = random_tensor({4}, 11), beta = random_tensor({4}, 12);
    Tensor rm1({4}), rv1({4}, 1.0f), rm2({4}), rv2({4}, 1.0f);
    BatchNormCache c1, c2;
    const BatchNormConfig cfg;
    CHECK(max_abs_diff(reference::batchnorm_train(yr, gamma, beta, rm1, rv1, cfg, c1),
                       parallel::batchnorm_train(yr, gamma, beta, rm2, rv2, cfg, c2)) < 1e-5);
    CHECK(max_abs_diff(rm1, rm2) < 1e-6);
    CHECK(max_abs_diff(rv1, rv2) < 1e-5);
    const auto br = reference::batchnorm_backward(gy, gamma, c1);
    const auto bp = parallel::batchnorm_backward(gy, gamma, c2);
    CHECK(max_abs_diff(br.grad_x, bp.grad_x) < 1e-5);
    CHECK(max_abs_diff(br.grad_gamma, bp.grad_gamma) < 1e-4);
}

TEST_CASE("fused block agrees with the reference block") {
    for (std::size_t avg : {std::size_t{0}, std::size_t{8}}) {
        ConvBlock p;
        p.weight = random_tensor({6, 3, 1, 4}, 13, 0.5f);
        p.bias = random_tensor({6}, 14);
        p.gamma = random_tensor({6}, 15);
        p.beta = random_tensor({6}, 16);
        p.running_mean = Tensor({6});
        p.running_var = Tensor({6}, 1.0f);
        auto q = p;
        const BlockSpec spec{avg, {}};
        const Tensor x = random_tensor({7, 3, 2, 32}, 17);
        BlockCache cr, cp;
        const Tensor yr = reference::block_forward_train(x, p, spec, cr);
        const Tensor yp = parallel::block_forward_train(x, q, spec, cp);
        CHECK(max_abs_diff(yr, yp) < 1e-5);
        CHECK(max_abs_diff(p.running_mean, q.running_mean) < 1e-6);
        CHECK(max_abs_diff(p.running_var, q.running_var) < 1e-5);

        const Tensor gy = random_tensor(yr.shape(), 18);
        const auto gr = reference::block_backward(gy, p, spec, cr, true);
        const auto gp = parallel::block_backward(gy, q, spec, cp, true);
        CHECK(max_abs_diff(gr.grad_x, gp.grad_x) < 1e-5);
        CHECK(max_abs_diff(gr.grad_w, gp.grad_w) < 1e-4);
        CHECK(max_abs_diff(gr.grad_b, gp.grad_b) < 1e-5);
        CHECK(max_abs_diff(gr.grad_gamma, gp.grad_gamma) < 1e-4);
        CHECK(max_abs_diff(gr.grad_beta, gp.grad_beta) < 1e-4);
        CHECK(parallel::block_backward(gy, q, spec, cp, false).grad_x.empty());

        CHECK(max_abs_diff(reference::block_forward_infer(x, p, spec), parallel::block_forward_infer(x, q, spec)) <
              1e-5);
    }
}

TEST_CASE("element-wise and pooling layers") {
    const Tensor x({1, 1, 1, 2}, {-1.0f, 2.0f});
    const Tensor y = relu(x);
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == 2.0f);

    const Tensor p({1, 1, 1, 4}, {1, 3, 2, 0});
    const auto pooled = maxpool_1x2(p);
    CHECK(pooled.y[0] == 3.0f);
    CHECK(pooled.y[1] == 2.0f);
    const Tensor back = maxpool_1x2_backward(Tensor({1, 1, 1, 2}, {5, 7}), pooled.argmax, p.shape());
    const float want[] = {0, 5, 7, 0};
    for (std::size_t i = 0; i < 4; ++i) CHECK(back[i] == want[i]);

    const Tensor tie({1, 1, 1, 2}, {4, 4});
    CHECK(maxpool_1x2(tie).argmax[0] == 0);

    const Tensor a({1, 1, 1, 4}, {1, 2, 3, 6});
    const Tensor avg = avgpool_width(a, 4);
    CHECK(avg[0] == 3.0f);
}

TEST_CASE("dropout") {
    const Tensor x({1, 20000}, 1.0f);
    Rng rng(5);
    std::vector<float> mask;
    const Tensor y = dropout_train(x, 0.5f, rng, mask);
    double mean = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        mean += y[i];
        CHECK((y[i] == 0.0f || y[i] == 2.0f));
        kept += y[i] != 0.0f;
    }
    mean /= static_cast<double>(y.size());
    CHECK(std::abs(mean - 1.0) < 0.02);
    CHECK(kept > 9000);

    // Expected output equals the input over many masks.
    const Tensor z = random_tensor({1, 16}, 6);
    std::vector<double> acc(16, 0.0);
    for (int trial = 0; trial < 4000; ++trial) {
        const Tensor d = dropout_train(z, 0.5f, rng, mask);
        for (std::size_t i = 0; i < 16; ++i) acc[i] += d[i];
    }
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(std::abs(acc[i] / 4000.0 - z[i]) <= 0.02 * std::max(1.0f, std::abs(z[i])) * 3.0);

    std::vector<float> none;
    const Tensor same = dropout_train(z, 0.0f, rng, none);
    CHECK(max_abs_diff(same, z) == 0.0);
    CHECK_THROWS_AS(dropout_train(z, 1.0f, rng, none), InvalidArgument);
}

TEST_CASE("softmax cross-entropy") {
    const Tensor logits({2, 5}, 0.7f);
    const std::vector<std::uint8_t> labels{0, 4};
    const auto sx = softmax_xent(logits, labels);
    for (float p : sx.probs.values()) CHECK(p == doctest::Approx(0.2));
    CHECK(sx.loss == doctest::Approx(1.6094379124341003).epsilon(1e-6));

    const Tensor wild = random_tensor({8, 5}, 7, 30.0f);
    const std::vector<std::uint8_t> l8{0, 1, 2, 3, 4, 0, 1, 2};
    const auto s2 = softmax_xent(wild, l8);
    CHECK(std::isfinite(s2.loss));
    for (std::size_t n = 0; n < 8; ++n) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 5; ++k) {
            CHECK(s2.probs[n * 5 + k] >= 0.0f);
            sum += s2.probs[n * 5 + k];
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    const Tensor g = softmax_xent_backward(sx.probs, labels);
    CHECK(g[0] == doctest::Approx((0.2 - 1.0) / 2.0));
    CHECK(g[1] == doctest::Approx(0.2 / 2.0));
    const std::vector<std::uint8_t> bad{0, 5};
    CHECK_THROWS_AS(softmax_xent(logits, bad), InvalidArgument);
}

TEST_CASE("fc layer") {
    const Tensor x({1, 2}, {1, 2});
    const Tensor w({2, 2}, {1, 0, 0.5f, -1});
    const Tensor b({2}, {0.25f, 0});
    const Tensor y = fc_forward(x, w, b);
    CHECK(y[0] == 1.25f);
    CHECK(y[1] == -1.5f);
    CHECK_THROWS_AS(fc_forward(x, Tensor({2, 3}), b), ShapeMismatch);
}

TEST_CASE("tensor basics") {
    Tensor t({2, 3}, 1.5f);
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    t.reshape({3, 2});
    CHECK(t.dim(0) == 3);
    CHECK_THROWS_AS(t.reshape({4, 2}), ShapeMismatch);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeMismatch);
    CHECK(t.all_finite());
    t[0] = std::nanf("");
    CHECK_FALSE(t.all_finite());
    CHECK(to_string(Shape{2, 1, 1024}) == "[2x1x1024]");
}
