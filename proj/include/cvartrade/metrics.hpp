#pragma once

// Backtest accounting: equity curves, drawdown, downside variance, a
// buy-and-hold baseline, and the report struct tying a run together.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "cvartrade/config.hpp"
#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"
#include "cvartrade/risk.hpp"

namespace cvartrade {

/// Everything a completed run reports. Equity curves have one more entry
/// than the per-step traces (the leading starting-wealth point).
struct BacktestReport {
    std::vector<double> equity;
    std::vector<double> baseline_equity;
    std::vector<double> positions;
    std::vector<double> rewards_aux;       ///< optimized rewards: pos * r - delta * vartheta
    std::vector<double> rewards_realized;  ///< accounting rewards: pos * r - delta * |d pos|
    std::vector<RiskEstimate> risk_trace;

    double total_return = 0.0;      ///< equity.back() / w0 - 1
    double total_return_sum = 0.0;  ///< plain sum of realized rewards
    double mdd = 0.0;
    double downside_variance = 0.0;
    double baseline_total_return = 0.0;
    double convexity_fraction = 0.0;  ///< share of steps meeting the per-step convexity condition

    std::size_t steps = 0;
    std::size_t barrier_violations = 0;  ///< nonpositive-slack evaluations (expected: none)
    double min_slack = std::numeric_limits<double>::infinity();

    LearnerConfig config_echo;
};

/// Raw traces handed from the learner loop to summarize().
struct RunArtifacts {
    double w0 = 1.0;
    std::vector<double> positions;
    std::vector<double> rewards_aux;
    std::vector<double> rewards_realized;
    std::vector<double> aligned_prices;  ///< prices over the trading horizon, length steps + 1
    std::vector<RiskEstimate> risk_trace;
    double convexity_fraction = 0.0;
    std::size_t barrier_violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
};

/// Largest peak-to-trough wealth fraction. Wealth must stay positive for
/// the fraction to be meaningful.
inline double max_drawdown(std::span<const double> wealth) {
    if (wealth.empty()) throw InsufficientDataError("max drawdown of an empty curve");
    double peak = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double w : wealth) {
        if (!(w > 0.0)) throw DomainError("max drawdown requires positive wealth");
        peak = std::max(peak, w);
        worst = std::max(worst, (peak - w) / peak);
    }
    return worst;
}

/// Population variance of the negative rewards only; zero when fewer than
/// two rewards are negative.
inline double downside_variance(std::span<const double> rewards) {
    std::vector<double> negatives;
    for (double r : rewards)
        if (r < 0.0) negatives.push_back(r);
    if (negatives.size() < 2) return 0.0;
    const double m = static_cast<double>(negatives.size());
    double mean = 0.0;
    for (double r : negatives) mean += r;
    mean /= m;
    double var = 0.0;
    for (double r : negatives) var += (r - mean) * (r - mean);
    return var / m;
}

/// Wealth of holding one unit bought at the first price: w0 * p_t / p_0.
inline std::vector<double> buy_and_hold(std::span<const double> prices, double w0) {
    if (prices.empty()) throw InsufficientDataError("buy-and-hold baseline needs prices");
    if (!(w0 > 0.0)) throw ParameterError("starting wealth must be > 0");
    std::vector<double> wealth;
    wealth.reserve(prices.size());
    for (double p : prices) {
        if (!(p > 0.0)) throw DomainError("buy-and-hold baseline requires positive prices");
        wealth.push_back(w0 * p / prices.front());
    }
    return wealth;
}

inline std::vector<double> buy_and_hold(const PriceSeries& series, double w0) {
    return buy_and_hold(std::span<const double>(series.prices), w0);
}

/// Assembles the report: equity compounding (or additive accumulation),
/// drawdown and downside statistics, and the buy-and-hold baseline.
inline BacktestReport summarize(const RunArtifacts& artifacts, const LearnerConfig& config) {
    const std::size_t steps = artifacts.positions.size();
    if (artifacts.rewards_aux.size() != steps || artifacts.rewards_realized.size() != steps ||
        artifacts.risk_trace.size() != steps)
        throw ConsistencyError("per-step traces have unequal lengths");
    if (artifacts.aligned_prices.size() != steps + 1)
        throw ConsistencyError("price horizon must have one more entry than the step traces");
    if (!(artifacts.w0 > 0.0)) throw ParameterError("starting wealth must be > 0");

    BacktestReport report;
    report.positions = artifacts.positions;
    report.rewards_aux = artifacts.rewards_aux;
    report.rewards_realized = artifacts.rewards_realized;
    report.risk_trace = artifacts.risk_trace;
    report.steps = steps;
    report.convexity_fraction = artifacts.convexity_fraction;
    report.barrier_violations = artifacts.barrier_violations;
    report.min_slack = artifacts.min_slack;
    report.config_echo = config;

    report.equity.reserve(steps + 1);
    report.equity.push_back(artifacts.w0);
    for (double r : artifacts.rewards_realized) {
        const double next = config.additive_equity ? report.equity.back() + artifacts.w0 * r
                                                   : report.equity.back() * (1.0 + r);
        report.equity.push_back(next);
    }

    report.baseline_equity = buy_and_hold(std::span<const double>(artifacts.aligned_prices),
                                          artifacts.w0);
    report.total_return = report.equity.back() / artifacts.w0 - 1.0;
    double sum = 0.0;
    for (double r : artifacts.rewards_realized) sum += r;
    report.total_return_sum = sum;
    report.mdd = max_drawdown(report.equity);
    report.downside_variance = downside_variance(report.rewards_realized);
    report.baseline_total_return = report.baseline_equity.back() / artifacts.w0 - 1.0;
    return report;
}

}  // namespace cvartrade
