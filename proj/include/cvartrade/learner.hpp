#pragma once

// Online risk-sensitive learner. At each market step the policy acts, the
// realized reward enters a rolling window, and a fixed number of inner
// subgradient iterations lower the estimated tail loss (CVaR) of that
// window plus an L2-norm penalty. Under transaction costs the turnover
// bound vartheta joins the parameters and two log-barrier terms keep
// |position - previous position| <= vartheta strictly feasible; the
// barrier weight decays as mu0 / i over the inner iterations.
//
// Inside the inner loop the newest window entry is re-evaluated as the
// reward the *current* iterate would have produced in the current state,
// so the window tail responds to the parameters being optimized; the
// window itself permanently keeps the reward that was actually realized.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cvartrade/config.hpp"
#include "cvartrade/convexity.hpp"
#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"
#include "cvartrade/metrics.hpp"
#include "cvartrade/policy.hpp"
#include "cvartrade/risk.hpp"

namespace cvartrade {

/// Margin added when restoring turnover-bound feasibility.
inline constexpr double kSlackMargin = 1e-6;

/// Mutable state threaded through the online loop.
struct LearnerState {
    PolicyParams params;
    double vartheta = 0.1;       ///< turnover bound, >= 0
    double prev_position = 0.0;  ///< position executed at the previous step
    RewardWindow window;
    std::size_t step = 0;        ///< outer (market) step index
    double barrier_mu = 0.0;     ///< current barrier weight; 0 disables the barrier terms

    LearnerState(std::size_t dim, const LearnerConfig& config)
        : vartheta(config.vartheta0),
          window(static_cast<std::size_t>(config.resolved_window_n()) + 2) {
        params.theta.assign(dim, 0.0);
        params.activation = config.activation;
        params.gain = config.gain;
    }
};

/// Subgradient of the augmented objective in (theta, vartheta).
struct Subgradient {
    std::vector<double> theta;
    double vartheta = 0.0;
};

/// Per-call diagnostics from the inner loop.
struct InnerDiagnostics {
    std::vector<double> cvar_per_iter;  ///< tail estimate at each iteration, before the update
    double min_slack = std::numeric_limits<double>::infinity();
    std::size_t slack_violations = 0;
};

namespace detail {

/// Everything the augmented objective sees at the current iterate: the
/// candidate position/reward, the window risk with the newest entry
/// replaced by that candidate, and the two barrier slacks.
struct CandidateEval {
    double score = 0.0;
    double position = 0.0;
    double reward = 0.0;
    double var = 0.0;
    double cvar = 0.0;
    bool tail = false;
    double slack_widen = 0.0;   ///< position - prev_position + vartheta
    double slack_shrink = 0.0;  ///< prev_position - position + vartheta
    std::size_t samples = 0;
};

inline CandidateEval eval_candidate(const LearnerState& state, const LearnerConfig& config,
                                    const StateVector& x, double asset_return) {
    if (state.window.empty())
        throw InsufficientDataError("inner loop requires at least one windowed reward");
    CandidateEval ev;
    ev.score = pre_activation(state.params, x);
    ev.position = activate(config.activation, ev.score, config.gain, config.long_only);
    if (!std::isfinite(ev.position))
        throw NumericError("non-finite position at step " + std::to_string(state.step));
    ev.reward = ev.position * asset_return - config.delta * state.vartheta;

    std::vector<double> rewards = window_to_vector(state.window);
    rewards.back() = ev.reward;  // newest entry follows the iterate
    const RiskEstimate est = cvar_from_rewards(rewards, config.gamma);
    ev.var = est.var;
    ev.cvar = est.cvar;
    ev.samples = est.sample_count;
    ev.tail = -ev.reward > ev.var;

    ev.slack_widen = ev.position - state.prev_position + state.vartheta;
    ev.slack_shrink = state.prev_position - ev.position + state.vartheta;
    return ev;
}

inline Subgradient subgradient_at(const CandidateEval& ev, const LearnerState& state,
                                  const LearnerConfig& config, const StateVector& x,
                                  double asset_return) {
    const double m = static_cast<double>(ev.samples);
    const double tail_scale = 1.0 / (m * (1.0 - config.gamma));
    const double slope =
        activation_derivative(config.activation, ev.score, config.gain, config.long_only);

    Subgradient grad;
    grad.theta.assign(x.values.size(), 0.0);

    // Tail term: only a tail sample moves the quantile excess.
    if (ev.tail) {
        const double scale = -asset_return * slope * tail_scale;
        for (std::size_t i = 0; i < grad.theta.size(); ++i)
            grad.theta[i] += scale * x.values[i];
        grad.vartheta += config.delta * tail_scale;
    }

    // L2-norm regularizer; its subgradient at theta = 0 is taken as zero.
    if (config.lambda > 0.0) {
        const double norm = l2_norm(state.params.theta);
        if (norm > 0.0)
            for (std::size_t i = 0; i < grad.theta.size(); ++i)
                grad.theta[i] += config.lambda * state.params.theta[i] / norm;
    }

    // Barrier terms -mu * [log(slack_widen) + log(slack_shrink)].
    if (state.barrier_mu > 0.0) {
        if (!(ev.slack_widen > 0.0) || !(ev.slack_shrink > 0.0))
            throw NumericError("barrier slack not positive at step " +
                               std::to_string(state.step));
        const double pull =
            state.barrier_mu * slope * (1.0 / ev.slack_shrink - 1.0 / ev.slack_widen);
        for (std::size_t i = 0; i < grad.theta.size(); ++i)
            grad.theta[i] += pull * x.values[i];
        grad.vartheta -= state.barrier_mu * (1.0 / ev.slack_widen + 1.0 / ev.slack_shrink);
    }
    return grad;
}

}  // namespace detail

/// Value of the augmented objective at the current iterate: windowed CVaR
/// with the newest entry re-evaluated, plus regularization and barrier.
inline double augmented_objective(const LearnerState& state, const LearnerConfig& config,
                                  const StateVector& x, double asset_return) {
    const auto ev = detail::eval_candidate(state, config, x, asset_return);
    double value = ev.cvar + config.lambda * detail::l2_norm(state.params.theta);
    if (state.barrier_mu > 0.0) {
        if (!(ev.slack_widen > 0.0) || !(ev.slack_shrink > 0.0))
            throw NumericError("barrier slack not positive at step " +
                               std::to_string(state.step));
        value -= state.barrier_mu * (std::log(ev.slack_widen) + std::log(ev.slack_shrink));
    }
    return value;
}

/// Subgradient of the augmented objective at the current iterate.
inline Subgradient objective_subgradient(const LearnerState& state, const LearnerConfig& config,
                                         const StateVector& x, double asset_return) {
    const auto ev = detail::eval_candidate(state, config, x, asset_return);
    return detail::subgradient_at(ev, state, config, x, asset_return);
}

/// Runs the inner subgradient iterations for one market step and returns
/// the advanced state (theta and vartheta updated; window and positions
/// untouched). Feasibility of the turnover bound is restored before every
/// barrier evaluation and once more after the loop.
inline LearnerState inner_optimize(LearnerState state, const LearnerConfig& config,
                                   const StateVector& x, double asset_return,
                                   InnerDiagnostics* diagnostics = nullptr) {
    if (state.window.empty())
        throw InsufficientDataError("inner loop requires at least one windowed reward");
    if (diagnostics) *diagnostics = InnerDiagnostics{};

    const bool barrier = config.barrier_active();
    const auto restore_feasibility = [&] {
        const double position =
            evaluate_policy(state.params, x, config.long_only).position;
        const double gap = std::abs(position - state.prev_position);
        if (state.vartheta <= gap) state.vartheta = gap + kSlackMargin;
    };

    for (int i = 1; i <= config.inner_iters; ++i) {
        state.barrier_mu = barrier ? config.barrier_mu0 / static_cast<double>(i) : 0.0;
        if (barrier) restore_feasibility();

        const auto ev = detail::eval_candidate(state, config, x, asset_return);
        if (diagnostics) {
            diagnostics->cvar_per_iter.push_back(ev.cvar);
            if (barrier) {
                const double slack = std::min(ev.slack_widen, ev.slack_shrink);
                diagnostics->min_slack = std::min(diagnostics->min_slack, slack);
                if (!(slack > 0.0)) ++diagnostics->slack_violations;
            }
        }

        const auto grad = detail::subgradient_at(ev, state, config, x, asset_return);
        for (std::size_t j = 0; j < state.params.theta.size(); ++j)
            state.params.theta[j] -= config.alpha * grad.theta[j];
        state.vartheta -= config.alpha * grad.vartheta;

        for (double w : state.params.theta)
            if (!std::isfinite(w))
                throw NumericError("non-finite weight at step " + std::to_string(state.step) +
                                   ", inner iteration " + std::to_string(i));
        if (!std::isfinite(state.vartheta))
            throw NumericError("non-finite turnover bound at step " +
                               std::to_string(state.step) + ", inner iteration " +
                               std::to_string(i));
    }

    if (barrier) restore_feasibility();
    state.vartheta = std::max(state.vartheta, 0.0);
    state.barrier_mu = 0.0;
    return state;
}

/// Observer hook for the online loop; `price_index` is the index of the
/// latest price visible when the position was chosen.
struct StepObserver {
    virtual ~StepObserver() = default;
    virtual void on_action(std::size_t step, std::size_t price_index, double position) = 0;
};

namespace detail {

/// Streaming engine over an abstract price accessor. Prices are consumed
/// strictly in time order: the position at step t is a function of prices
/// up to index lags + 1 + t only, which the observer hook can verify.
template <class PriceAt>
BacktestReport run_online_core(PriceAt&& price_at, std::size_t n_prices,
                               const LearnerConfig& config, StepObserver* observer = nullptr) {
    config.validate();
    const std::size_t n = static_cast<std::size_t>(config.lags);
    if (n_prices < n + 3)
        throw InsufficientDataError("need more than lags + 2 prices; got " +
                                    std::to_string(n_prices));

    const auto price = [&](std::size_t i) {
        const double p = price_at(i);
        if (!(p > 0.0) || !std::isfinite(p))
            throw DomainError("price at index " + std::to_string(i) +
                              " must be finite and positive");
        return p;
    };

    const std::size_t n_returns = n_prices - 1;
    const double ema_weight = 2.0 / (static_cast<double>(config.filter_span) + 1.0);

    LearnerState state(n + 2, config);
    RunArtifacts artifacts;
    artifacts.w0 = config.w0;
    const std::size_t total_steps = n_returns - 1 - n;
    artifacts.positions.reserve(total_steps);
    artifacts.rewards_aux.reserve(total_steps);
    artifacts.rewards_realized.reserve(total_steps);
    artifacts.risk_trace.reserve(total_steps);
    std::vector<ConvexityStep> convexity_steps;
    convexity_steps.reserve(total_steps);

    std::vector<double> filtered;
    filtered.reserve(n_returns);
    double prev_price = price(0);

    for (std::size_t j = 0; j + 1 < n_returns; ++j) {
        // New price arrives; extend the smoothed-return history.
        const double p_now = price(j + 1);
        const double r_now = p_now / prev_price - 1.0;
        prev_price = p_now;
        filtered.push_back(filtered.empty() ? r_now
                                            : ema_weight * r_now +
                                                  (1.0 - ema_weight) * filtered.back());
        if (j < n) continue;  // not enough lags yet

        // Sense and act on information available up to price index j + 1.
        const StateVector x = make_state(filtered, j, n);
        const double score = pre_activation(state.params, x);
        const double position = activate(config.activation, score, config.gain, config.long_only);
        if (!std::isfinite(position))
            throw NumericError("non-finite position at step " + std::to_string(state.step));
        if (observer) observer->on_action(state.step, j + 1, position);

        // The next price settles the trade.
        const double p_next = price(j + 2);
        const double r_next = p_next / p_now - 1.0;
        const double reward_aux = position * r_next - config.delta * state.vartheta;
        const double reward_real =
            position * r_next - config.delta * std::abs(position - state.prev_position);
        state.window.push(reward_aux);

        artifacts.positions.push_back(position);
        artifacts.rewards_aux.push_back(reward_aux);
        artifacts.rewards_realized.push_back(reward_real);
        convexity_steps.push_back(ConvexityStep{score, r_next, 0.0});

        InnerDiagnostics diag;
        state = inner_optimize(std::move(state), config, x, r_next, &diag);
        artifacts.barrier_violations += diag.slack_violations;
        artifacts.min_slack = std::min(artifacts.min_slack, diag.min_slack);

        state.prev_position = position;
        ++state.step;
        artifacts.risk_trace.push_back(estimate_cvar(state.window, config.gamma));
    }

    // Reporting only: align the price path with the executed steps.
    artifacts.aligned_prices.reserve(total_steps + 1);
    for (std::size_t i = n + 1; i < n_prices; ++i) artifacts.aligned_prices.push_back(price(i));

    artifacts.convexity_fraction =
        audit_run(config.activation, std::span<const ConvexityStep>(convexity_steps));
    return summarize(artifacts, config);
}

}  // namespace detail

/// Runs the full online loop over a price series and reports the backtest.
inline BacktestReport run_online(const PriceSeries& prices, const LearnerConfig& config,
                                 StepObserver* observer = nullptr) {
    return detail::run_online_core([&](std::size_t i) { return prices.prices[i]; },
                                   prices.size(), config, observer);
}

}  // namespace cvartrade
