#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "seq/loss.hpp"
#include "test_util.hpp"

using seq::Tensor;

TEST_CASE("cross entropy on hand-computed cases") {
    REQUIRE(seq::cross_entropy(Tensor({1, 2}, {1.0, 0.0}), {0}) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(seq::cross_entropy(Tensor({1, 2}, {0.5, 0.5}), {1}) ==
            Catch::Approx(std::log(2.0)).epsilon(1e-12));
    const double want = -(std::log(0.9) + std::log(0.8)) / 2.0;
    REQUIRE(seq::cross_entropy(Tensor({2, 2}, {0.9, 0.1, 0.2, 0.8}), {0, 1}) ==
            Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("cross entropy clamps a zero-probability true label") {
    const double loss = seq::cross_entropy(Tensor({1, 2}, {1.0, 0.0}), {1});
    REQUIRE(std::isfinite(loss));
    REQUIRE(loss == Catch::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("cross entropy validates rows and labels") {
    REQUIRE_THROWS_AS(seq::cross_entropy(Tensor({1, 2}, {0.7, 0.7}), {0}), seq::PreconditionError);
    REQUIRE_THROWS_AS(seq::cross_entropy(Tensor({1, 2}, {0.5, 0.5}), {2}), seq::PreconditionError);
    REQUIRE_THROWS_AS(seq::cross_entropy(Tensor({2, 2}, {1, 0, 1, 0}), {0}), seq::PreconditionError);
}

TEST_CASE("mse on hand-computed cases") {
    const Tensor x({3}, {1, 2, 3});
    REQUIRE(seq::mse(x, x) == 0.0);
    REQUIRE(seq::mse(Tensor({2}, {0, 0}), Tensor({2}, {1, 1})) == Catch::Approx(1.0));
    REQUIRE(seq::mse(Tensor({3}, {1, 2, 3}), Tensor({3}, {1, 1, 1})) ==
            Catch::Approx((0.0 + 1.0 + 4.0) / 3.0));
    REQUIRE_THROWS_AS(seq::mse(x, Tensor({2}, {1, 2})), seq::PreconditionError);
}

TEST_CASE("mse gradient matches finite differences") {
    seq::Rng rng(31);
    const Tensor target = testutil::random_tensor({2, 5}, rng);
    Tensor xhat = testutil::random_tensor({2, 5}, rng);
    const Tensor g = seq::mse_grad(target, xhat);
    const auto fd = oracle::finite_diff_grad(
        [&](const std::vector<double>& v) {
            Tensor t = xhat;
            t.data = v;
            return seq::mse(target, t);
        },
        xhat.data);
    REQUIRE(oracle::max_relative_error(g.data, fd) < 1e-6);
}

TEST_CASE("fused softmax cross entropy agrees with the two-step path") {
    seq::Rng rng(17);
    const Tensor logits = testutil::random_tensor({4, 7}, rng, 3.0);
    const std::vector<int> labels = {0, 3, 6, 2};
    const auto fused = seq::softmax_cross_entropy_from_logits(logits, labels);

    // explicit softmax, then -log p
    double want = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
        double mx = logits(r, 0);
        for (std::size_t j = 1; j < 7; ++j) mx = std::max(mx, logits(r, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < 7; ++j) denom += std::exp(logits(r, j) - mx);
        want -= (logits(r, static_cast<std::size_t>(labels[r])) - mx) - std::log(denom);
    }
    want /= 4.0;
    REQUIRE(fused.loss == Catch::Approx(want).epsilon(1e-12));

    const auto fd = oracle::finite_diff_grad(
        [&](const std::vector<double>& v) {
            Tensor t = logits;
            t.data = v;
            return seq::softmax_cross_entropy_from_logits(t, labels).loss;
        },
        logits.data);
    REQUIRE(oracle::max_relative_error(fused.dlogits.data, fd) < 1e-6);
}

TEST_CASE("fused loss stays finite under extreme logits") {
    const Tensor logits({1, 3}, {1000.0, -1000.0, 0.0});
    const auto r = seq::softmax_cross_entropy_from_logits(logits, {1});
    REQUIRE(std::isfinite(r.loss));
    REQUIRE(r.dlogits.all_finite());
}
