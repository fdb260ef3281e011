#pragma once

// Rolling tail-risk estimation. Losses are negated rewards; value-at-risk
// at level gamma is the k-th smallest loss with k = max(1, ceil(m*gamma)),
// and conditional value-at-risk adds the mean excess above that quantile:
//
//   cvar = var + (1 / (m * (1 - gamma))) * sum_j max(loss_j - var, 0)
//
// At gamma = 0 this telescopes to the plain mean loss, which is computed
// directly so the reduction is exact in floating point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "cvartrade/errors.hpp"

namespace cvartrade {

/// Fixed-capacity FIFO of recent rewards; pushing beyond capacity evicts
/// the oldest entry. Capacity is the estimation window plus warm-up slack.
class RewardWindow {
  public:
    explicit RewardWindow(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ParameterError("reward window capacity must be >= 1");
    }

    void push(double reward) {
        if (values_.size() == capacity_) values_.pop_front();
        values_.push_back(reward);
    }

    double newest() const {
        if (values_.empty()) throw InsufficientDataError("reward window is empty");
        return values_.back();
    }

    std::size_t size() const { return values_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return values_.empty(); }
    bool full() const { return values_.size() == capacity_; }

    /// Insertion-ordered contents, oldest first.
    const std::deque<double>& values() const { return values_; }

  private:
    std::size_t capacity_;
    std::deque<double> values_;
};

/// Point estimates of the loss quantile and tail mean over one window.
struct RiskEstimate {
    double var = 0.0;
    double cvar = 0.0;
    double gamma = 0.0;
    std::size_t sample_count = 0;
};

namespace detail {

inline void check_gamma(double gamma) {
    if (!(gamma >= 0.0) || !(gamma < 1.0))
        throw ParameterError("gamma must lie in [0, 1)");
}

/// 1-based rank of the loss order statistic used as value-at-risk.
inline std::size_t tail_rank(std::size_t m, double gamma) {
    const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * gamma));
    return std::clamp<std::size_t>(k, 1, m);
}

/// Quantile of a loss scratch buffer (reordered in place).
inline double var_from_losses(std::vector<double>& losses, double gamma) {
    const std::size_t k = tail_rank(losses.size(), gamma);
    std::nth_element(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     losses.end());
    return losses[k - 1];
}

/// Core estimator over a reward span in insertion order.
inline RiskEstimate cvar_from_rewards(std::span<const double> rewards, double gamma) {
    check_gamma(gamma);
    if (rewards.empty()) throw InsufficientDataError("no samples for risk estimate");
    const std::size_t m = rewards.size();

    std::vector<double> losses;
    losses.reserve(m);
    for (double r : rewards) losses.push_back(-r);
    const double var = var_from_losses(losses, gamma);

    double cvar;
    if (gamma == 0.0) {
        // Mean loss, summed in insertion order so -mean(rewards) is exact.
        double sum = 0.0;
        for (double r : rewards) sum += -r;
        cvar = sum / static_cast<double>(m);
    } else {
        double excess = 0.0;
        for (double loss : losses) excess += std::max(loss - var, 0.0);
        cvar = var + excess / (static_cast<double>(m) * (1.0 - gamma));
    }
    return RiskEstimate{var, std::max(cvar, var), gamma, m};
}

inline std::vector<double> window_to_vector(const RewardWindow& window) {
    return std::vector<double>(window.values().begin(), window.values().end());
}

}  // namespace detail

/// Loss quantile (value-at-risk) of the windowed rewards at level gamma.
inline double estimate_var(const RewardWindow& window, double gamma) {
    detail::check_gamma(gamma);
    if (window.empty()) throw InsufficientDataError("no samples for risk estimate");
    std::vector<double> losses;
    losses.reserve(window.size());
    for (double r : window.values()) losses.push_back(-r);
    return detail::var_from_losses(losses, gamma);
}

/// Tail mean (conditional value-at-risk) of the windowed rewards; the
/// returned estimate also carries var, gamma, and the sample count.
inline RiskEstimate estimate_cvar(const RewardWindow& window, double gamma) {
    const auto rewards = detail::window_to_vector(window);
    return detail::cvar_from_rewards(rewards, gamma);
}

/// Whether the newest sample sits strictly inside the loss tail, i.e. its
/// loss exceeds the current quantile. This gates the data term of the
/// objective subgradient: only tail samples contribute.
inline bool cvar_subgradient_flag(const RewardWindow& window, double gamma) {
    const double var = estimate_var(window, gamma);
    return -window.newest() > var;
}

}  // namespace cvartrade
