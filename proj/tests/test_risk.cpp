// Tail-risk estimator tests. The reference oracle below recomputes both
// estimates through a deliberately different route (full sort plus the
// literal excess-over-quantile sum) so the production path (nth_element,
// accumulated positive parts) is checked against an independent
// implementation, not against itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cvartrade/risk.hpp"

using namespace cvartrade;

namespace {

double oracle_var(std::vector<double> rewards, double gamma) {
    std::vector<double> losses;
    for (double r : rewards) losses.push_back(-r);
    std::sort(losses.begin(), losses.end());
    const auto m = losses.size();
    auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * gamma));
    if (k < 1) k = 1;
    if (k > m) k = m;
    return losses[k - 1];
}

double oracle_cvar(const std::vector<double>& rewards, double gamma) {
    const double var = oracle_var(rewards, gamma);
    const auto m = static_cast<double>(rewards.size());
    if (gamma == 0.0) {
        double sum = 0.0;
        for (double r : rewards) sum += -r;
        return sum / m;
    }
    double excess = 0.0;
    for (double r : rewards) {
        const double loss = -r;
        if (loss > var) excess += loss - var;
    }
    return var + excess / (m * (1.0 - gamma));
}

RewardWindow window_of(const std::vector<double>& rewards, std::size_t capacity = 0) {
    RewardWindow w(capacity == 0 ? rewards.size() : capacity);
    for (double r : rewards) w.push(r);
    return w;
}

}  // namespace

TEST_CASE("reward window is a fixed-capacity FIFO", "[risk]") {
    RewardWindow w(3);
    CHECK(w.empty());
    CHECK(w.capacity() == 3);
    w.push(1.0);
    w.push(2.0);
    w.push(3.0);
    CHECK(w.full());
    CHECK(w.newest() == 3.0);
    w.push(4.0);  // evicts the oldest
    CHECK(w.size() == 3);
    const std::vector<double> contents(w.values().begin(), w.values().end());
    CHECK(contents == std::vector<double>{2.0, 3.0, 4.0});

    CHECK_THROWS_AS(RewardWindow(0), ParameterError);
    CHECK_THROWS_AS(RewardWindow(1).newest(), InsufficientDataError);
}

TEST_CASE("quantile of losses at the median level", "[risk]") {
    const auto w = window_of({0.01, -0.02, 0.03, -0.04});
    CHECK_THAT(estimate_var(w, 0.5), Catch::Matchers::WithinAbs(-0.01, 1e-15));
}

TEST_CASE("tail mean adds the excess over the quantile", "[risk]") {
    const auto w = window_of({0.01, -0.02, 0.03, -0.04});
    const auto est = estimate_cvar(w, 0.5);
    CHECK_THAT(est.var, Catch::Matchers::WithinAbs(-0.01, 1e-15));
    CHECK_THAT(est.cvar, Catch::Matchers::WithinAbs(0.03, 1e-15));
    CHECK(est.gamma == 0.5);
    CHECK(est.sample_count == 4);
}

TEST_CASE("worked integer example", "[risk]") {
    // losses 1, 2, 3, 4 at gamma = 0.5: quantile 2, tail mean 3.5
    const auto w = window_of({-1.0, -2.0, -3.0, -4.0});
    const auto est = estimate_cvar(w, 0.5);
    CHECK(est.var == 2.0);
    CHECK(est.cvar == 3.5);
}

TEST_CASE("gamma zero reduces to the exact negated mean", "[risk]") {
    const auto w = window_of({0.013, -0.021, 0.007, 0.0042, -0.0001});
    const auto est = estimate_cvar(w, 0.0);
    double sum = 0.0;
    for (double r : w.values()) sum += r;
    CHECK(est.cvar == -(sum / 5.0));  // bitwise, not approximate
    CHECK(est.var == oracle_var({0.013, -0.021, 0.007, 0.0042, -0.0001}, 0.0));
}

TEST_CASE("gamma zero quantile clamps to the smallest loss", "[risk]") {
    const auto w = window_of({0.01, 0.02});
    CHECK(estimate_var(w, 0.0) == -0.02);
}

TEST_CASE("single sample: quantile and tail mean coincide", "[risk]") {
    const auto w = window_of({-0.05});
    const auto est = estimate_cvar(w, 0.9);
    CHECK(est.var == 0.05);
    CHECK(est.cvar == 0.05);
}

TEST_CASE("tail flag fires only for strictly-tail newest samples", "[risk]") {
    SECTION("newest is a deep loss") {
        const auto w = window_of({0.01, -0.02, 0.03, -0.04});
        CHECK(cvar_subgradient_flag(w, 0.5));
    }
    SECTION("newest is the best reward") {
        const auto w = window_of({-0.02, -0.04, 0.01, 0.03});
        CHECK_FALSE(cvar_subgradient_flag(w, 0.5));
    }
    SECTION("single sample is its own quantile") {
        const auto w = window_of({-0.05});
        CHECK_FALSE(cvar_subgradient_flag(w, 0.9));
    }
    SECTION("ties with the quantile do not fire") {
        const auto w = window_of({-0.03, 0.01, -0.03});
        // losses: 0.03, -0.01, 0.03; gamma 0.6 -> k = 2 -> quantile 0.03
        CHECK_FALSE(cvar_subgradient_flag(w, 0.6));
    }
}

TEST_CASE("argument validation", "[risk]") {
    const auto w = window_of({0.01, 0.02});
    CHECK_THROWS_AS(estimate_cvar(w, 1.0), ParameterError);
    CHECK_THROWS_AS(estimate_cvar(w, -0.1), ParameterError);
    CHECK_THROWS_AS(estimate_var(w, 1.5), ParameterError);
    CHECK_THROWS_AS(estimate_cvar(RewardWindow(4), 0.5), InsufficientDataError);
    CHECK_THROWS_AS(estimate_var(RewardWindow(4), 0.5), InsufficientDataError);
}

TEST_CASE("estimator agrees with the sort-based oracle", "[risk]") {
    std::mt19937 rng(20260825);
    std::uniform_real_distribution<double> value(-0.08, 0.08);
    std::uniform_int_distribution<std::size_t> size(1, 12);
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<double> rewards(size(rng));
        for (double& r : rewards) r = value(rng);
        const auto w = window_of(rewards);
        for (int g = 0; g <= 9; ++g) {
            const double gamma = 0.1 * g;
            CAPTURE(trial, gamma, rewards.size());
            CHECK_THAT(estimate_var(w, gamma),
                       Catch::Matchers::WithinAbs(oracle_var(rewards, gamma), 1e-12));
            CHECK_THAT(estimate_cvar(w, gamma).cvar,
                       Catch::Matchers::WithinAbs(oracle_cvar(rewards, gamma), 1e-12));
        }
    }
}

TEST_CASE("tail mean never falls below the quantile", "[risk]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(1, 40);
    std::uniform_real_distribution<double> level(0.0, 0.999);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> rewards(size(rng));
        for (double& r : rewards) r = value(rng);
        const double gamma = level(rng);
        const auto est = estimate_cvar(window_of(rewards), gamma);
        CHECK(est.cvar >= est.var);
    }
}

TEST_CASE("tail mean is nondecreasing in the tail level", "[risk]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> value(-0.5, 0.5);
    std::uniform_int_distribution<std::size_t> size(1, 25);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> rewards(size(rng));
        for (double& r : rewards) r = value(rng);
        const auto w = window_of(rewards);
        double previous = estimate_cvar(w, 0.0).cvar;
        for (double gamma : {0.1, 0.3, 0.5, 0.7, 0.9, 0.97}) {
            const double current = estimate_cvar(w, gamma).cvar;
            CHECK(current >= previous - 1e-12);
            previous = current;
        }
    }
}

TEST_CASE("translation and positive scaling behave like a coherent risk measure", "[risk]") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> value(-0.2, 0.2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> rewards(8);
        for (double& r : rewards) r = value(rng);
        const double gamma = 0.6;
        const double base = estimate_cvar(window_of(rewards), gamma).cvar;

        std::vector<double> shifted = rewards;
        for (double& r : shifted) r += 0.05;  // uniformly better rewards
        CHECK_THAT(estimate_cvar(window_of(shifted), gamma).cvar,
                   Catch::Matchers::WithinAbs(base - 0.05, 1e-12));

        std::vector<double> scaled = rewards;
        for (double& r : scaled) r *= 3.0;
        CHECK_THAT(estimate_cvar(window_of(scaled), gamma).cvar,
                   Catch::Matchers::WithinAbs(3.0 * base, 1e-12));
    }
}
