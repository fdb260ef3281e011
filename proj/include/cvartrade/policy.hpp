#pragma once

// Parametric single-asset trading policy: a linear score theta . x pushed
// through a squashing activation yields a position in [-1, 1] (or [0, 1]
// in long-only mode), plus the reward variants that price that position.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"

namespace cvartrade {

enum class Activation { ClippedLinear, Tanh, Sigmoid };

inline std::string_view to_string(Activation activation) {
    switch (activation) {
        case Activation::ClippedLinear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "linear";
}

inline std::optional<Activation> activation_from_string(std::string_view name) {
    if (name == "linear") return Activation::ClippedLinear;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    return std::nullopt;
}

/// Policy weights; theta has one entry per state coordinate, the last one
/// multiplying the constant bias input. `gain` scales the pre-activation
/// of the clipped-linear activation before clipping.
struct PolicyParams {
    std::vector<double> theta;
    Activation activation = Activation::ClippedLinear;
    double gain = 1.0;
};

/// A position as a signed fraction of one unit of capital.
struct TradeSignal {
    double position = 0.0;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double l2_norm(const std::vector<double>& v) {
    return std::sqrt(dot(v, v));
}

}  // namespace detail

/// Linear score theta . x before the activation.
inline double pre_activation(const PolicyParams& params, const StateVector& state) {
    if (params.theta.size() != state.values.size())
        throw ShapeError("theta has " + std::to_string(params.theta.size()) +
                         " entries but state has " + std::to_string(state.values.size()));
    return detail::dot(params.theta, state.values);
}

/// Activation value for a pre-activation score. Long-only clamps the
/// clipped-linear range to [0, 1]; sigmoid is long-only by construction.
inline double activate(Activation activation, double score, double gain = 1.0,
                       bool long_only = false) {
    switch (activation) {
        case Activation::ClippedLinear: {
            const double lo = long_only ? 0.0 : -1.0;
            return std::clamp(gain * score, lo, 1.0);
        }
        case Activation::Tanh:
            return std::tanh(score);
        case Activation::Sigmoid:
            return 1.0 / (1.0 + std::exp(-score));
    }
    return 0.0;
}

/// d activation / d score. The clipped-linear derivative is taken as zero
/// on the clipped region including its boundary.
inline double activation_derivative(Activation activation, double score, double gain = 1.0,
                                    bool long_only = false) {
    switch (activation) {
        case Activation::ClippedLinear: {
            const double lo = long_only ? 0.0 : -1.0;
            const double scaled = gain * score;
            return (scaled > lo && scaled < 1.0) ? gain : 0.0;
        }
        case Activation::Tanh: {
            const double t = std::tanh(score);
            return 1.0 - t * t;
        }
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-score));
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

/// d^2 activation / d score^2 (zero almost everywhere for clipped-linear).
inline double activation_second_derivative(Activation activation, double score) {
    switch (activation) {
        case Activation::ClippedLinear:
            return 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(score);
            return -2.0 * t * (1.0 - t * t);
        }
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-score));
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
    }
    return 0.0;
}

/// Position taken in the given state.
inline TradeSignal evaluate_policy(const PolicyParams& params, const StateVector& state,
                                   bool long_only = false) {
    const double score = pre_activation(params, state);
    const double position = activate(params.activation, score, params.gain, long_only);
    if (!std::isfinite(position))
        throw NumericError("policy produced a non-finite position");
    return TradeSignal{position};
}

/// Reward without friction: position times the next-period return.
inline double reward_frictionless(TradeSignal signal, double asset_return) {
    return signal.position * asset_return;
}

/// Reward net of proportional transaction cost on the position change.
inline double reward_with_cost(TradeSignal signal, TradeSignal previous, double asset_return,
                               double delta) {
    if (delta < 0.0) throw ParameterError("cost rate delta must be >= 0");
    return signal.position * asset_return - delta * std::abs(signal.position - previous.position);
}

/// Reward charging the cost rate against the auxiliary turnover bound
/// instead of the realized position change.
inline double reward_with_aux(TradeSignal signal, double vartheta, double asset_return,
                              double delta) {
    if (delta < 0.0) throw ParameterError("cost rate delta must be >= 0");
    if (vartheta < 0.0) throw ParameterError("turnover bound vartheta must be >= 0");
    return signal.position * asset_return - delta * vartheta;
}

/// Capital-allocation reward: a fraction `position` of wealth earns the
/// risky return, the remainder earns the riskless return. Long-only.
inline double reward_allocation(TradeSignal signal, double risky_return,
                                double riskless_return) {
    if (signal.position < 0.0 || signal.position > 1.0)
        throw DomainError("allocation reward requires a position in [0, 1]");
    return signal.position * risky_return + (1.0 - signal.position) * riskless_return;
}

/// Gradient of the frictionless reward in theta:
/// d(position * r)/d theta = r * f'(score) * x.
inline std::vector<double> policy_gradient(const PolicyParams& params, const StateVector& state,
                                           double asset_return, bool long_only = false) {
    const double score = pre_activation(params, state);
    const double slope = activation_derivative(params.activation, score, params.gain, long_only);
    std::vector<double> grad(state.values.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        grad[i] = asset_return * slope * state.values[i];
    return grad;
}

}  // namespace cvartrade
