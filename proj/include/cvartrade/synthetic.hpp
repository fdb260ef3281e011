#pragma once

// Seeded synthetic price generators for experiments and stress tests.
// All models evolve a log price so generated prices stay positive, and
// draw from a fixed-order PRNG stream so a given (model, seed, steps)
// triple always yields the same series.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"

namespace cvartrade {

enum class SynthModel { Trend, MeanRevert, RegimeSwitch, RandomWalk };

inline std::string_view to_string(SynthModel model) {
    switch (model) {
        case SynthModel::Trend: return "trend";
        case SynthModel::MeanRevert: return "meanrevert";
        case SynthModel::RegimeSwitch: return "regime-switch";
        case SynthModel::RandomWalk: return "random-walk";
    }
    return "random-walk";
}

inline std::optional<SynthModel> synth_model_from_string(std::string_view name) {
    if (name == "trend") return SynthModel::Trend;
    if (name == "meanrevert") return SynthModel::MeanRevert;
    if (name == "regime-switch") return SynthModel::RegimeSwitch;
    if (name == "random-walk") return SynthModel::RandomWalk;
    return std::nullopt;
}

/// Generator parameters. The defaults are scaled to intraday bars (drifts
/// of a few basis points, volatility of 10-20 bp per step).
struct SynthSpec {
    SynthModel model = SynthModel::RandomWalk;
    std::size_t steps = 1000;   ///< number of rows produced
    std::uint64_t seed = 0;
    double start_price = 100.0;

    // trend: AR(1) log returns around a positive drift
    double drift = 4e-4;
    double autocorr = 0.3;
    double volatility = 2e-3;   ///< also the random-walk volatility

    // meanrevert: pull of the log price toward its starting level
    double reversion = 0.05;

    // regime-switch: calm/stress two-state Markov chain
    double calm_drift = 2e-4;
    double calm_vol = 1.5e-3;
    double stress_drift = -1.5e-3;
    double stress_vol = 9e-3;
    double p_calm_to_stress = 0.006;
    double p_stress_to_calm = 0.03;
};

/// Generates `spec.steps` rows; row zero is the start price and timestamps
/// are consecutive integers.
inline PriceSeries generate_prices(const SynthSpec& spec) {
    if (spec.steps == 0) throw ParameterError("synthetic series needs at least one step");
    if (!(spec.start_price > 0.0)) throw ParameterError("start price must be > 0");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    PriceSeries series;
    series.timestamps.reserve(spec.steps);
    series.prices.reserve(spec.steps);

    double log_price = std::log(spec.start_price);
    double ar_return = spec.drift;  // trend model state
    bool stressed = false;          // regime-switch model state

    for (std::size_t i = 0; i < spec.steps; ++i) {
        series.timestamps.push_back(static_cast<std::int64_t>(i));
        // row zero carries the start price exactly, not exp(log(start))
        series.prices.push_back(i == 0 ? spec.start_price : std::exp(log_price));
        if (i + 1 == spec.steps) break;

        double increment = 0.0;
        switch (spec.model) {
            case SynthModel::RandomWalk:
                increment = spec.volatility * gauss(rng);
                break;
            case SynthModel::Trend:
                ar_return = spec.drift + spec.autocorr * (ar_return - spec.drift) +
                            spec.volatility * gauss(rng);
                increment = ar_return;
                break;
            case SynthModel::MeanRevert:
                increment = spec.reversion * (std::log(spec.start_price) - log_price) +
                            spec.volatility * gauss(rng);
                break;
            case SynthModel::RegimeSwitch: {
                // Fixed draw order: regime transition first, then the shock.
                const double flip = uniform(rng);
                if (stressed ? flip < spec.p_stress_to_calm : flip < spec.p_calm_to_stress)
                    stressed = !stressed;
                const double drift = stressed ? spec.stress_drift : spec.calm_drift;
                const double vol = stressed ? spec.stress_vol : spec.calm_vol;
                increment = drift + vol * gauss(rng);
                break;
            }
        }
        log_price += increment;
    }
    return series;
}

}  // namespace cvartrade
