#pragma once

// Run configuration shared by the online learner, the report assembly, and
// the command-line front end.

#include <cstdint>
#include <string>

#include "cvartrade/errors.hpp"
#include "cvartrade/policy.hpp"

namespace cvartrade {

struct LearnerConfig {
    double gamma = 0.9;          ///< tail level of the loss quantile, in [0, 1)
    double alpha = 0.01;         ///< subgradient step size, in (0, 1)
    double lambda = 0.01;        ///< L2-norm regularization weight, in [0, 1]
    int window_n = 0;            ///< estimation window N; 0 selects 50, or 100 when gamma >= 0.99
    int lags = 8;                ///< number of past smoothed returns n beyond the current one
    int inner_iters = 10;        ///< subgradient iterations per market step, >= 1
    double delta = 0.0;          ///< proportional transaction cost rate, >= 0
    double barrier_mu0 = 1.0;    ///< initial log-barrier weight; iteration i uses mu0 / i
    std::uint64_t seed = 0;      ///< echoed into reports; drives synthetic data, not the learner
    Activation activation = Activation::ClippedLinear;
    double gain = 1.0;           ///< pre-clip slope of the clipped-linear activation
    bool long_only = false;      ///< restrict positions to [0, 1]
    int filter_span = 5;         ///< EMA span applied to raw returns, >= 1
    double w0 = 1.0;             ///< starting wealth for equity accounting
    double vartheta0 = 0.1;      ///< initial turnover bound
    bool additive_equity = false;///< accumulate rewards additively instead of compounding

    /// Effective estimation window: explicit value, or the tail-level
    /// dependent default (deep tails need more samples).
    int resolved_window_n() const {
        if (window_n > 0) return window_n;
        return gamma >= 0.99 ? 100 : 50;
    }

    /// Whether the log-barrier terms are active: they exist to keep the
    /// turnover bound feasible, which only matters under nonzero cost.
    bool barrier_active() const { return delta > 0.0 && barrier_mu0 > 0.0; }

    void validate() const {
        if (!(gamma >= 0.0) || !(gamma < 1.0)) throw ParameterError("gamma must lie in [0, 1)");
        if (!(alpha > 0.0) || !(alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
        if (!(lambda >= 0.0) || lambda > 1.0) throw ParameterError("lambda must lie in [0, 1]");
        if (window_n < 0) throw ParameterError("window must be >= 0 (0 = auto)");
        if (lags < 0) throw ParameterError("lags must be >= 0");
        if (inner_iters < 1) throw ParameterError("inner-iters must be >= 1");
        if (delta < 0.0) throw ParameterError("delta must be >= 0");
        if (barrier_mu0 < 0.0) throw ParameterError("barrier weight must be >= 0");
        if (filter_span < 1) throw ParameterError("filter-span must be >= 1");
        if (!(w0 > 0.0)) throw ParameterError("starting wealth must be > 0");
        if (vartheta0 < 0.0) throw ParameterError("initial turnover bound must be >= 0");
        if (!(gain > 0.0)) throw ParameterError("activation gain must be > 0");
        if (long_only && activation == Activation::Tanh)
            throw ParameterError("tanh activation cannot be long-only; use sigmoid");
    }
};

}  // namespace cvartrade
