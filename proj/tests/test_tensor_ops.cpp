// Op-level tests: analytic values, shape arithmetic, and central
// finite-difference gradient checks in double precision.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "remnet/kernels.hpp"
#include "remnet/ops.hpp"
#include "remnet/rng.hpp"
#include "remnet/tensor.hpp"
#include "test_support.hpp"

using namespace remnet;
using test_support::fd_grad;
using test_support::grad_rel_err;

namespace {

Tensor randn(std::vector<std::int64_t> shape, std::uint64_t seed, double stddev = 1.0) {
    Rng rng(seed);
    return Tensor::randn(std::move(shape), rng, stddev);
}

// Scalar probe loss: weighted sum of all outputs with fixed random weights.
struct ProbeLoss {
    std::vector<double> weights;
    explicit ProbeLoss(std::size_t n, std::uint64_t seed) : weights(n) {
        Rng rng(seed);
        for (double& w : weights) w = rng.next_gaussian();
    }
    double operator()(const Tensor& out) const {
        return kern::dot(weights.data(), out.data(), weights.size());
    }
    Tensor grad(const std::vector<std::int64_t>& shape) const {
        return Tensor::from_data(std::vector<std::int64_t>(shape),
                                 std::vector<double>(weights));
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

TEST_CASE("conv2d reproduces the 7x7/s2 widening shape") {
    Tensor x = randn({1, 64, 64, 3}, 42);
    Tensor w = randn({7, 7, 3, 64}, 43, 0.05);
    Tensor b({64});
    ops::ConvSpec spec{7, 7, 2, ops::Padding::Same};
    Tensor out = ops::conv2d_forward(x, w, &b, spec);
    CHECK(out.shape() == std::vector<std::int64_t>{1, 32, 32, 64});
}

TEST_CASE("conv2d 1x1 identity weights pass the input through") {
    Tensor x = randn({2, 4, 4, 3}, 7);
    Tensor w({1, 1, 3, 3});
    for (int c = 0; c < 3; ++c) w[static_cast<std::size_t>(c) * 3 + c] = 1.0;
    Tensor b({3});
    ops::ConvSpec spec{1, 1, 1, ops::Padding::Same};
    Tensor out = ops::conv2d_forward(x, w, &b, spec);
    REQUIRE(out.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(out[i] == x[i]);
}

TEST_CASE("conv2d shape errors are reported") {
    Tensor x = randn({1, 4, 4, 3}, 1);
    Tensor w = randn({3, 3, 2, 4}, 2);  // wrong Cin
    ops::ConvSpec spec{3, 3, 1, ops::Padding::Same};
    CHECK_THROWS_AS(ops::conv2d_forward(x, w, nullptr, spec), std::invalid_argument);
}

TEST_CASE("conv2d analytic gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (const auto& [stride, pad] :
             {std::pair{1, ops::Padding::Same}, std::pair{2, ops::Padding::Same},
              std::pair{1, ops::Padding::Valid}}) {
            Tensor x = randn({1, 5, 5, 2}, seed * 11 + stride);
            Tensor w = randn({3, 3, 2, 3}, seed * 13 + stride, 0.5);
            Tensor b = randn({3}, seed * 17 + stride, 0.5);
            ops::ConvSpec spec{3, 3, stride, pad};

            Tensor out = ops::conv2d_forward(x, w, &b, spec);
            ProbeLoss probe(out.numel(), seed * 19);
            Tensor gw({3, 3, 2, 3}), gb({3});
            Tensor gin =
                ops::conv2d_backward(x, w, spec, probe.grad(out.shape()), gw.data(), gb.data());

            auto loss = [&] { return probe(ops::conv2d_forward(x, w, &b, spec)); };
            double max_err = 0.0;
            for (std::size_t i = 0; i < x.numel(); ++i) {
                max_err = std::max(max_err, grad_rel_err(gin[i], fd_grad(loss, &x[i])));
            }
            for (std::size_t i = 0; i < w.numel(); ++i) {
                max_err = std::max(max_err, grad_rel_err(gw[i], fd_grad(loss, &w[i])));
            }
            for (std::size_t i = 0; i < b.numel(); ++i) {
                max_err = std::max(max_err, grad_rel_err(gb[i], fd_grad(loss, &b[i])));
            }
            CHECK(max_err <= 1e-5);
        }
    }
}

// ---------------------------------------------------------------------------
// batch_norm

TEST_CASE("batch_norm keeps an all-zero batch at zero") {
    Tensor x({2, 3, 3, 4});
    Tensor gamma = Tensor::full({4}, 1.0);
    Tensor beta({4});
    Tensor rm({4}), rv({4});
    Tensor out = ops::batch_norm_forward(x, gamma, beta, rm, rv, true, 1e-5, 0.9, nullptr);
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("batch_norm normalizes batch statistics in training mode") {
    Rng rng(99);
    Tensor x({4, 8, 8, 2});
    for (double& v : x.values()) v = 5.0 + 2.0 * rng.next_gaussian();
    Tensor gamma = Tensor::full({2}, 1.0);
    Tensor beta({2});
    Tensor rm({2}), rv({2});
    Tensor out = ops::batch_norm_forward(x, gamma, beta, rm, rv, true, 1e-5, 0.9, nullptr);

    const std::size_t rows = out.numel() / 2;
    for (int c = 0; c < 2; ++c) {
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            sum += out[r * 2 + c];
            sum_sq += out[r * 2 + c] * out[r * 2 + c];
        }
        const double mean = sum / static_cast<double>(rows);
        const double var = sum_sq / static_cast<double>(rows) - mean * mean;
        CHECK(std::fabs(mean) <= 1e-6);
        CHECK(std::fabs(std::sqrt(var) - 1.0) <= 1e-4);  // eps shifts sigma slightly
    }
}

TEST_CASE("batch_norm rejects an empty batch in training mode") {
    Tensor x({0, 2, 2, 3});
    Tensor gamma = Tensor::full({3}, 1.0);
    Tensor beta({3});
    Tensor rm({3}), rv({3});
    CHECK_THROWS_AS(ops::batch_norm_forward(x, gamma, beta, rm, rv, true, 1e-5, 0.9, nullptr),
                    std::invalid_argument);
}

TEST_CASE("batch_norm running stats blend with momentum and stay non-negative") {
    Tensor x = randn({2, 4, 4, 3}, 5);
    Tensor gamma = Tensor::full({3}, 1.0);
    Tensor beta({3});
    Tensor rm({3}), rv({3});
    ops::batch_norm_forward(x, gamma, beta, rm, rv, true, 1e-5, 0.9, nullptr);
    for (int c = 0; c < 3; ++c) CHECK(rv[c] >= 0.0);

    // Eval mode must use the running stats, not the batch.
    Tensor rm_copy = rm, rv_copy = rv;
    Tensor y = ops::batch_norm_forward(x, gamma, beta, rm, rv, false, 1e-5, 0.9, nullptr);
    for (int c = 0; c < 3; ++c) {
        CHECK(rm[c] == rm_copy[c]);
        CHECK(rv[c] == rv_copy[c]);
    }
    const double expect = (x[0] - rm[0]) / std::sqrt(rv[0] + 1e-5);
    CHECK(y[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("batch_norm analytic gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Tensor x = randn({2, 4, 4, 3}, seed * 23);
        Tensor gamma = randn({3}, seed * 29, 0.5);
        for (double& g : gamma.values()) g += 1.0;
        Tensor beta = randn({3}, seed * 31, 0.5);

        Tensor rm({3}), rv({3});
        ops::BatchNormCache cache;
        Tensor out = ops::batch_norm_forward(x, gamma, beta, rm, rv, true, 1e-5, 0.9, &cache);
        ProbeLoss probe(out.numel(), seed * 37);
        Tensor dgamma({3}), dbeta({3});
        Tensor gin = ops::batch_norm_backward(cache, gamma, probe.grad(out.shape()),
                                              dgamma.data(), dbeta.data());

        auto loss = [&] {
            Tensor m({3}), v({3});
            return probe(ops::batch_norm_forward(x, gamma, beta, m, v, true, 1e-5, 0.9, nullptr));
        };
        double max_err = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            max_err = std::max(max_err, grad_rel_err(gin[i], fd_grad(loss, &x[i])));
        }
        for (int c = 0; c < 3; ++c) {
            max_err = std::max(max_err, grad_rel_err(dgamma[c], fd_grad(loss, &gamma[c])));
            max_err = std::max(max_err, grad_rel_err(dbeta[c], fd_grad(loss, &beta[c])));
        }
        CHECK(max_err <= 1e-4);
    }
}

// ---------------------------------------------------------------------------
// prelu

TEST_CASE("prelu definition and identity slope") {
    Tensor x = Tensor::from_data({1, 1, 2, 1}, {2.0, -2.0});
    Tensor slope = Tensor::full({1}, 0.25);
    Tensor out = ops::prelu_forward(x, slope);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == -0.5);

    Tensor one = Tensor::full({1}, 1.0);
    Tensor id = ops::prelu_forward(x, one);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(id[i] == x[i]);
}

TEST_CASE("prelu analytic gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Tensor x = randn({2, 3, 3, 4}, seed * 41);
        // Keep inputs away from the kink so the finite difference is clean.
        for (double& v : x.values()) {
            if (std::fabs(v) < 1e-3) v = v < 0 ? v - 1e-3 : v + 1e-3;
        }
        Tensor slope = Tensor::full({4}, 0.25);
        Tensor out = ops::prelu_forward(x, slope);
        ProbeLoss probe(out.numel(), seed * 43);
        Tensor dslope({4});
        Tensor gin = ops::prelu_backward(x, slope, probe.grad(out.shape()), dslope.data());

        auto loss = [&] { return probe(ops::prelu_forward(x, slope)); };
        double max_err = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            max_err = std::max(max_err, grad_rel_err(gin[i], fd_grad(loss, &x[i])));
        }
        for (int c = 0; c < 4; ++c) {
            max_err = std::max(max_err, grad_rel_err(dslope[c], fd_grad(loss, &slope[c])));
        }
        CHECK(max_err <= 1e-6);
    }
}

// ---------------------------------------------------------------------------
// avg_pool

TEST_CASE("avg_pool constants and arithmetic mean") {
    Tensor c = Tensor::full({1, 8, 8, 2}, 3.25);
    Tensor out = ops::avg_pool_forward(c, 4);
    REQUIRE(out.shape() == std::vector<std::int64_t>{1, 2, 2, 2});
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(3.25));

    std::vector<double> vals(16);
    for (int i = 0; i < 16; ++i) vals[i] = i + 1;
    Tensor x = Tensor::from_data({1, 4, 4, 1}, std::move(vals));
    Tensor pooled = ops::avg_pool_forward(x, 4);
    REQUIRE(pooled.numel() == 1);
    CHECK(pooled[0] == doctest::Approx(8.5));
}

TEST_CASE("avg_pool rejects indivisible dimensions") {
    Tensor x({1, 5, 4, 1});
    CHECK_THROWS_AS(ops::avg_pool_forward(x, 4), std::invalid_argument);
}

TEST_CASE("avg_pool gradient matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Tensor x = randn({2, 4, 4, 3}, seed * 47);
        Tensor out = ops::avg_pool_forward(x, 2);
        ProbeLoss probe(out.numel(), seed * 53);
        Tensor gin = ops::avg_pool_backward(x.shape(), 2, probe.grad(out.shape()));
        auto loss = [&] { return probe(ops::avg_pool_forward(x, 2)); };
        double max_err = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            max_err = std::max(max_err, grad_rel_err(gin[i], fd_grad(loss, &x[i])));
        }
        CHECK(max_err <= 1e-6);
    }
}

// ---------------------------------------------------------------------------
// softmax

TEST_CASE("softmax symmetry, shift invariance, and stability") {
    Tensor zeros({1, 4});
    Tensor u = ops::softmax_forward(zeros);
    for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25).epsilon(1e-12));

    Tensor logits = Tensor::from_data({1, 3}, {0.3, -1.2, 2.5});
    Tensor shifted = Tensor::from_data({1, 3}, {0.3 + 7.0, -1.2 + 7.0, 2.5 + 7.0});
    Tensor a = ops::softmax_forward(logits);
    Tensor b = ops::softmax_forward(shifted);
    for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

    Tensor extreme = Tensor::from_data({1, 2}, {1000.0, 0.0});
    Tensor s = ops::softmax_forward(extreme);
    CHECK(std::isfinite(s[0]));
    CHECK(std::isfinite(s[1]));
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(0.0));
}

TEST_CASE("softmax rows form a probability simplex") {
    Rng rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor logits = Tensor::randn({4, 7}, rng, 5.0);
        Tensor p = ops::softmax_forward(logits);
        for (int b = 0; b < 4; ++b) {
            double row = 0.0;
            for (int i = 0; i < 7; ++i) {
                const double v = p[static_cast<std::size_t>(b) * 7 + i];
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                row += v;
            }
            CHECK(std::fabs(row - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("softmax backward matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Tensor logits = randn({2, 5}, seed * 59);
        Tensor probs = ops::softmax_forward(logits);
        ProbeLoss probe(probs.numel(), seed * 61);
        Tensor gin = ops::softmax_backward(probs, probe.grad(probs.shape()));
        auto loss = [&] { return probe(ops::softmax_forward(logits)); };
        double max_err = 0.0;
        for (std::size_t i = 0; i < logits.numel(); ++i) {
            max_err = std::max(max_err, grad_rel_err(gin[i], fd_grad(loss, &logits[i])));
        }
        CHECK(max_err <= 1e-4);
    }
}

// ---------------------------------------------------------------------------
// concat

TEST_CASE("concat_channels layout and backward split") {
    Tensor a = randn({1, 2, 2, 3}, 71);
    Tensor b = randn({1, 2, 2, 2}, 73);
    Tensor cat = ops::concat_channels(a, b);
    REQUIRE(cat.shape() == std::vector<std::int64_t>{1, 2, 2, 5});
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(cat[static_cast<std::size_t>(r) * 5 + c] == a[static_cast<std::size_t>(r) * 3 + c]);
        }
        for (int c = 0; c < 2; ++c) {
            CHECK(cat[static_cast<std::size_t>(r) * 5 + 3 + c] ==
                  b[static_cast<std::size_t>(r) * 2 + c]);
        }
    }

    Tensor gout = randn({1, 2, 2, 5}, 79);
    Tensor ga({1, 2, 2, 3}), gb({1, 2, 2, 2});
    ops::concat_channels_backward(gout, ga, gb);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 3; ++c) {
            CHECK(ga[static_cast<std::size_t>(r) * 3 + c] ==
                  gout[static_cast<std::size_t>(r) * 5 + c]);
        }
        for (int c = 0; c < 2; ++c) {
            CHECK(gb[static_cast<std::size_t>(r) * 2 + c] ==
                  gout[static_cast<std::size_t>(r) * 5 + 3 + c]);
        }
    }
}
