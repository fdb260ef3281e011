#pragma once

// Convexity diagnostics for the per-step objective. The reward Hessian in
// theta factors as f''(score) * r times the state outer product x x^T, a
// rank-one PSD matrix whose spectrum is kappa zeros plus 1 + sum of the
// squared feature coordinates (the bias contributes the 1). The per-step
// objective is convex whenever f''(score) * r <= 0, which splits into two
// branches: concave activation with nonnegative return, or convex
// activation with nonpositive return.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"
#include "cvartrade/policy.hpp"

namespace cvartrade {

using Matrix = std::vector<std::vector<double>>;

/// Which side of the convexity condition f''(score) * r <= 0 holds.
enum class ConvexityBranch {
    None,               ///< condition fails: f''(score) * r > 0
    ConcaveNonnegative, ///< f'' < 0 and return >= 0
    ConvexNonpositive,  ///< f'' > 0 and return <= 0
    Both,               ///< f'' == 0: affine, so both branches hold for any return
};

/// Structural summary of one step's reward Hessian.
struct HessianReport {
    double scalar = 0.0;              ///< f''(score) * r multiplying the outer product
    std::vector<double> eigenvalues;  ///< of x x^T, ascending
    bool outer_psd = false;
    ConvexityBranch branch = ConvexityBranch::None;
};

/// Outer product x x^T of the state with itself (symmetric, rank one).
inline Matrix state_outer_matrix(const StateVector& state) {
    const std::size_t d = state.values.size();
    if (d == 0) throw ShapeError("state vector is empty");
    Matrix outer(d, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            outer[i][j] = state.values[i] * state.values[j];
    return outer;
}

/// Closed-form spectrum of x x^T: dimension-1 zeros and |x|^2, ascending.
/// With the trailing bias input of 1 the top eigenvalue is 1 plus the sum
/// of squared feature coordinates.
inline std::vector<double> state_matrix_eigenvalues(const StateVector& state) {
    const std::size_t d = state.values.size();
    if (d == 0) throw ShapeError("state vector is empty");
    double norm_sq = 0.0;
    for (double v : state.values) norm_sq += v * v;
    std::vector<double> eigenvalues(d, 0.0);
    eigenvalues.back() = norm_sq;
    return eigenvalues;
}

/// Evaluates the per-step condition at a given pre-activation score and
/// return. In allocation mode the return is measured against the riskless
/// rate, matching the allocation reward's curvature.
inline ConvexityBranch convexity_condition(Activation activation, double score,
                                           double asset_return, bool allocation_mode = false,
                                           double riskless_return = 0.0) {
    const double r = allocation_mode ? asset_return - riskless_return : asset_return;
    const double curvature = activation_second_derivative(activation, score);
    // an affine stretch is concave and convex at once, so the sign of the
    // return cannot break the condition there
    if (curvature == 0.0) return ConvexityBranch::Both;
    if (curvature < 0.0 && r >= 0.0) return ConvexityBranch::ConcaveNonnegative;
    if (curvature > 0.0 && r <= 0.0) return ConvexityBranch::ConvexNonpositive;
    return ConvexityBranch::None;
}

/// Reward Hessian in theta at one step: f''(score) * r * x x^T.
inline Matrix reward_hessian(const PolicyParams& params, const StateVector& state,
                             double asset_return) {
    const double score = pre_activation(params, state);
    const double scale = activation_second_derivative(params.activation, score) * asset_return;
    Matrix hessian = state_outer_matrix(state);
    for (auto& row : hessian)
        for (double& v : row) v *= scale;
    return hessian;
}

/// Full structural report for one step.
inline HessianReport hessian_report(const PolicyParams& params, const StateVector& state,
                                    double asset_return, bool allocation_mode = false,
                                    double riskless_return = 0.0) {
    const double score = pre_activation(params, state);
    HessianReport report;
    report.scalar = activation_second_derivative(params.activation, score) * asset_return;
    report.eigenvalues = state_matrix_eigenvalues(state);
    report.outer_psd = true;  // x x^T has spectrum {0, ..., |x|^2}
    for (double ev : report.eigenvalues)
        if (ev < 0.0) report.outer_psd = false;
    report.branch = convexity_condition(params.activation, score, asset_return, allocation_mode,
                                        riskless_return);
    return report;
}

/// One observed step of a run, as needed by the convexity audit.
struct ConvexityStep {
    double pre_activation = 0.0;
    double asset_return = 0.0;
    double riskless_return = 0.0;
};

/// Fraction of steps on which the convexity condition held.
inline double audit_run(Activation activation, std::span<const ConvexityStep> steps,
                        bool allocation_mode = false) {
    if (steps.empty()) throw InsufficientDataError("convexity audit of an empty run");
    std::size_t met = 0;
    for (const auto& step : steps) {
        const auto branch = convexity_condition(activation, step.pre_activation,
                                                step.asset_return, allocation_mode,
                                                step.riskless_return);
        if (branch != ConvexityBranch::None) ++met;
    }
    return static_cast<double>(met) / static_cast<double>(steps.size());
}

}  // namespace cvartrade
