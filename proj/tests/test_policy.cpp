// Policy evaluation, reward variants, and the reward gradient.

#include <cmath>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cvartrade/policy.hpp"

using namespace cvartrade;

namespace {

StateVector state_of(std::vector<double> values) { return StateVector{std::move(values)}; }

PolicyParams params_of(std::vector<double> theta, Activation activation, double gain = 1.0) {
    return PolicyParams{std::move(theta), activation, gain};
}

}  // namespace

TEST_CASE("pre-activation is the linear score", "[policy]") {
    const auto params = params_of({0.5, -0.25, 0.1}, Activation::ClippedLinear);
    const auto x = state_of({0.02, 0.04, 1.0});
    CHECK_THAT(pre_activation(params, x), Catch::Matchers::WithinAbs(0.1, 1e-15));
    CHECK_THROWS_AS(pre_activation(params_of({0.5}, Activation::Tanh), x), ShapeError);
}

TEST_CASE("clipped-linear activation is identity inside, clipped outside", "[policy]") {
    const auto x = state_of({1.0});
    CHECK(evaluate_policy(params_of({0.42}, Activation::ClippedLinear), x).position == 0.42);
    CHECK(evaluate_policy(params_of({1.7}, Activation::ClippedLinear), x).position == 1.0);
    CHECK(evaluate_policy(params_of({-1.7}, Activation::ClippedLinear), x).position == -1.0);
    // the pre-clip gain scales the score before clipping
    CHECK(evaluate_policy(params_of({0.2, 0.0}, Activation::ClippedLinear, 3.0),
                          state_of({1.0, 1.0}))
              .position == Catch::Approx(0.6));
}

TEST_CASE("tanh and sigmoid activations", "[policy]") {
    const auto x = state_of({0.3, 1.0});
    CHECK_THAT(evaluate_policy(params_of({1.0, 0.0}, Activation::Tanh), x).position,
               Catch::Matchers::WithinAbs(std::tanh(0.3), 1e-15));
    CHECK_THAT(evaluate_policy(params_of({0.0, 0.0}, Activation::Sigmoid), x).position,
               Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("zero weights give a flat position", "[policy]") {
    const auto x = state_of({0.5, -0.4, 1.0});
    CHECK(evaluate_policy(params_of({0.0, 0.0, 0.0}, Activation::ClippedLinear), x).position ==
          0.0);
    CHECK(evaluate_policy(params_of({0.0, 0.0, 0.0}, Activation::Tanh), x).position == 0.0);
}

TEST_CASE("positions respect the admissible range", "[policy]") {
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> weight(-4.0, 4.0);
    std::uniform_real_distribution<double> feature(-0.3, 0.3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> theta(5), values(5);
        for (auto& w : theta) w = weight(rng);
        for (auto& v : values) v = feature(rng);
        values.back() = 1.0;
        const auto x = state_of(values);
        for (auto activation : {Activation::ClippedLinear, Activation::Tanh}) {
            const double p = evaluate_policy(params_of(theta, activation), x).position;
            CHECK(p >= -1.0);
            CHECK(p <= 1.0);
        }
        const double ps = evaluate_policy(params_of(theta, Activation::Sigmoid), x).position;
        CHECK(ps >= 0.0);
        CHECK(ps <= 1.0);
        const double pl =
            evaluate_policy(params_of(theta, Activation::ClippedLinear), x, true).position;
        CHECK(pl >= 0.0);
        CHECK(pl <= 1.0);
    }
}

TEST_CASE("frictionless reward is position times return", "[policy]") {
    CHECK(reward_frictionless(TradeSignal{0.5}, 0.02) == 0.01);
    CHECK(reward_frictionless(TradeSignal{-1.0}, 0.02) == -0.02);
}

TEST_CASE("transaction cost charges the position change", "[policy]") {
    // 0.5 * 0.02 - 0.0015 * |0.5 - 0.3| = 0.0097
    CHECK_THAT(reward_with_cost(TradeSignal{0.5}, TradeSignal{0.3}, 0.02, 0.0015),
               Catch::Matchers::WithinAbs(0.0097, 1e-15));
    // full reversal on a flat return costs two position units
    CHECK_THAT(reward_with_cost(TradeSignal{1.0}, TradeSignal{-1.0}, 0.0, 0.0015),
               Catch::Matchers::WithinAbs(-0.003, 1e-15));
    CHECK_THROWS_AS(reward_with_cost(TradeSignal{0.1}, TradeSignal{0.0}, 0.01, -0.1),
                    ParameterError);
}

TEST_CASE("cost never improves on the frictionless reward", "[policy]") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    std::uniform_real_distribution<double> ret(-0.05, 0.05);
    for (int trial = 0; trial < 200; ++trial) {
        const TradeSignal now{pos(rng)}, before{pos(rng)};
        const double r = ret(rng);
        const double frictionless = reward_frictionless(now, r);
        const double with_cost = reward_with_cost(now, before, r, 0.002);
        CHECK(with_cost <= frictionless);
    }
    // equality when the position is unchanged
    CHECK(reward_with_cost(TradeSignal{0.4}, TradeSignal{0.4}, 0.01, 0.002) ==
          reward_frictionless(TradeSignal{0.4}, 0.01));
}

TEST_CASE("auxiliary-bound reward charges the bound, not the change", "[policy]") {
    CHECK_THAT(reward_with_aux(TradeSignal{0.5}, 0.25, 0.02, 0.002),
               Catch::Matchers::WithinAbs(0.0095, 1e-15));
    CHECK(reward_with_aux(TradeSignal{0.5}, 0.25, 0.02, 0.0) ==
          reward_frictionless(TradeSignal{0.5}, 0.02));
    CHECK_THROWS_AS(reward_with_aux(TradeSignal{0.5}, -0.1, 0.02, 0.002), ParameterError);
}

TEST_CASE("allocation reward blends risky and riskless returns", "[policy]") {
    CHECK_THAT(reward_allocation(TradeSignal{0.6}, 0.01, 0.002),
               Catch::Matchers::WithinAbs(0.0068, 1e-15));
    CHECK(reward_allocation(TradeSignal{0.3}, 0.01, 0.0) ==
          reward_frictionless(TradeSignal{0.3}, 0.01));
    CHECK_THROWS_AS(reward_allocation(TradeSignal{-0.1}, 0.01, 0.002), DomainError);
    CHECK_THROWS_AS(reward_allocation(TradeSignal{1.1}, 0.01, 0.002), DomainError);
}

TEST_CASE("reward gradient in the unsaturated linear region", "[policy]") {
    const auto params = params_of({0.2, 0.1}, Activation::ClippedLinear);
    const auto x = state_of({0.1, 1.0});
    const auto grad = policy_gradient(params, x, 0.05);
    REQUIRE(grad.size() == 2);
    CHECK_THAT(grad[0], Catch::Matchers::WithinAbs(0.005, 1e-15));
    CHECK_THAT(grad[1], Catch::Matchers::WithinAbs(0.05, 1e-15));
}

TEST_CASE("reward gradient vanishes in the clipped region", "[policy]") {
    const auto params = params_of({2.0, 1.0}, Activation::ClippedLinear);
    const auto x = state_of({0.5, 1.0});  // score 2.0, saturated
    for (double g : policy_gradient(params, x, 0.05)) CHECK(g == 0.0);
}

TEST_CASE("tanh gradient at zero weights is the raw state scaled by the return", "[policy]") {
    const auto params = params_of({0.0, 0.0, 0.0}, Activation::Tanh);
    const auto x = state_of({0.1, -0.2, 1.0});
    const auto grad = policy_gradient(params, x, 0.03);
    CHECK_THAT(grad[0], Catch::Matchers::WithinAbs(0.003, 1e-15));
    CHECK_THAT(grad[1], Catch::Matchers::WithinAbs(-0.006, 1e-15));
    CHECK_THAT(grad[2], Catch::Matchers::WithinAbs(0.03, 1e-15));
}

TEST_CASE("reward gradient matches central differences", "[policy]") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> weight(-0.8, 0.8);
    std::uniform_real_distribution<double> feature(-0.4, 0.4);
    std::uniform_real_distribution<double> ret(-0.05, 0.05);
    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 150; ++trial) {
        const auto activation = static_cast<Activation>(trial % 3);
        std::vector<double> theta(4), values(4);
        for (auto& w : theta) w = weight(rng);
        for (auto& v : values) v = feature(rng);
        values.back() = 1.0;
        const auto params = params_of(theta, activation);
        const auto x = state_of(values);
        const double score = pre_activation(params, x);
        // keep clipped-linear samples away from the kinks
        if (activation == Activation::ClippedLinear && std::abs(std::abs(score) - 1.0) < 1e-3)
            continue;
        const double r = ret(rng);
        const auto grad = policy_gradient(params, x, r);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            auto plus = params, minus = params;
            plus.theta[i] += h;
            minus.theta[i] -= h;
            const double fd = (reward_frictionless(evaluate_policy(plus, x), r) -
                               reward_frictionless(evaluate_policy(minus, x), r)) /
                              (2.0 * h);
            CHECK_THAT(grad[i], Catch::Matchers::WithinAbs(fd, 1e-6 * std::max(1.0, std::abs(fd))));
        }
        ++checked;
    }
    CHECK(checked >= 150);
}

TEST_CASE("activation second derivatives match central differences", "[policy]") {
    const double h = 1e-4;
    for (auto activation : {Activation::Tanh, Activation::Sigmoid}) {
        for (double score : {-1.4, -0.3, 0.0, 0.6, 2.1}) {
            const double fd = (activate(activation, score + h) - 2.0 * activate(activation, score) +
                               activate(activation, score - h)) /
                              (h * h);
            CHECK_THAT(activation_second_derivative(activation, score),
                       Catch::Matchers::WithinAbs(fd, 1e-6));
        }
    }
    CHECK(activation_second_derivative(Activation::ClippedLinear, 0.3) == 0.0);
}

// On the branch where the clipped-linear activation is concave (score
// >= -1) and the return is nonnegative, the negated reward is convex in
// theta, clipping included.
TEST_CASE("negated clipped-linear reward is midpoint-convex on the concave branch", "[policy]") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> weight(-2.0, 2.0);
    std::uniform_real_distribution<double> feature(-0.5, 0.5);
    std::uniform_real_distribution<double> ret(0.0, 0.05);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> values(4);
        for (auto& v : values) v = feature(rng);
        values.back() = 1.0;
        const auto x = state_of(values);
        const double r = ret(rng);

        const auto sample_params = [&] {
            std::vector<double> theta(4);
            for (auto& w : theta) w = weight(rng);
            auto params = params_of(theta, Activation::ClippedLinear);
            if (pre_activation(params, x) < -1.0)  // reflect onto the concave branch
                for (auto& w : params.theta) w = -w;
            return params;
        };
        const auto a = sample_params();
        const auto b = sample_params();
        PolicyParams mid = a;
        for (std::size_t i = 0; i < mid.theta.size(); ++i)
            mid.theta[i] = 0.5 * (a.theta[i] + b.theta[i]);

        const auto loss = [&](const PolicyParams& p) {
            return -reward_frictionless(evaluate_policy(p, x), r);
        };
        CHECK(loss(mid) <= 0.5 * (loss(a) + loss(b)) + 1e-10);
    }
}
