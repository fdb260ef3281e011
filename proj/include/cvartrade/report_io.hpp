#pragma once

// Deterministic artifact writers: CSV traces, a JSON metrics summary, and
// small self-contained SVG charts. Doubles are rendered with the shortest
// round-trippable decimal form so re-running a run reproduces files byte
// for byte.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "cvartrade/config.hpp"
#include "cvartrade/errors.hpp"
#include "cvartrade/market_data.hpp"
#include "cvartrade/metrics.hpp"

namespace cvartrade {

/// Shortest decimal string that parses back to exactly `value`.
inline std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) throw NumericError("failed to format a double");
    return std::string(buffer, ptr);
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

}  // namespace detail

/// step,equity,baseline_equity — one row per curve point (step 0 = start).
inline void write_equity_csv(const BacktestReport& report, const std::string& path) {
    auto out = detail::open_out(path);
    out << "step,equity,baseline_equity\n";
    for (std::size_t i = 0; i < report.equity.size(); ++i)
        out << i << ',' << format_double(report.equity[i]) << ','
            << format_double(report.baseline_equity[i]) << '\n';
}

/// step,position,position_change,cost,reward_aux,reward_realized.
inline void write_trades_csv(const BacktestReport& report, const std::string& path) {
    auto out = detail::open_out(path);
    out << "step,position,position_change,cost,reward_aux,reward_realized\n";
    double prev = 0.0;
    const double delta = report.config_echo.delta;
    for (std::size_t i = 0; i < report.positions.size(); ++i) {
        const double change = report.positions[i] - prev;
        out << i << ',' << format_double(report.positions[i]) << ',' << format_double(change)
            << ',' << format_double(delta * std::abs(change)) << ','
            << format_double(report.rewards_aux[i]) << ','
            << format_double(report.rewards_realized[i]) << '\n';
        prev = report.positions[i];
    }
}

/// step,var,cvar,samples — the per-step tail-risk trace.
inline void write_risk_csv(const BacktestReport& report, const std::string& path) {
    auto out = detail::open_out(path);
    out << "step,var,cvar,samples\n";
    for (std::size_t i = 0; i < report.risk_trace.size(); ++i)
        out << i << ',' << format_double(report.risk_trace[i].var) << ','
            << format_double(report.risk_trace[i].cvar) << ','
            << report.risk_trace[i].sample_count << '\n';
}

inline nlohmann::ordered_json config_to_json(const LearnerConfig& config) {
    nlohmann::ordered_json j;
    j["gamma"] = config.gamma;
    j["delta"] = config.delta;
    j["alpha"] = config.alpha;
    j["lambda"] = config.lambda;
    j["window"] = config.resolved_window_n();
    j["lags"] = config.lags;
    j["inner_iters"] = config.inner_iters;
    j["activation"] = std::string(to_string(config.activation));
    j["filter_span"] = config.filter_span;
    j["seed"] = config.seed;
    j["long_only"] = config.long_only;
    return j;
}

inline nlohmann::ordered_json metrics_to_json(const BacktestReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["steps"] = report.steps;
    j["total_return"] = report.total_return;
    j["total_return_sum"] = report.total_return_sum;
    j["final_equity"] = report.equity.empty() ? 0.0 : report.equity.back();
    j["mdd"] = report.mdd;
    j["downside_variance"] = report.downside_variance;
    j["baseline_total_return"] = report.baseline_total_return;
    j["convexity_fraction"] = report.convexity_fraction;
    j["barrier_violations"] = report.barrier_violations;
    if (std::isfinite(report.min_slack))
        j["min_slack"] = report.min_slack;
    else
        j["min_slack"] = nullptr;  // barrier never engaged
    j["config"] = config_to_json(report.config_echo);
    return j;
}

inline void write_metrics_json(const BacktestReport& report, const std::string& path) {
    auto out = detail::open_out(path);
    out << metrics_to_json(report).dump(2) << '\n';
}

/// timestamp,price rows for a generated or transformed series.
inline void write_prices_csv(const PriceSeries& series, const std::string& path) {
    auto out = detail::open_out(path);
    out << "timestamp,price\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << series.timestamps[i] << ',' << format_double(series.prices[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Minimal SVG charts. Coordinates are rounded to fixed precision so output
// is stable; long series are thinned to a bounded number of points.

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb4";
    bool dashed = false;
};

namespace detail {

inline std::string svg_coord(double v) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v,
                                         std::chars_format::fixed, 2);
    if (ec != std::errc{}) return "0";
    return std::string(buffer, ptr);
}

}  // namespace detail

/// Writes one chart with a polyline per series; axes are annotated with
/// the data extremes only.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::vector<ChartSeries>& series) {
    constexpr double width = 960, height = 480, pad = 56;
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (!(x_max > x_min)) x_max = x_min + 1.0;
    if (!(y_max > y_min)) y_max = y_min + 1.0;
    const auto px = [&](double x) { return pad + (x - x_min) / (x_max - x_min) * (width - 2 * pad); };
    const auto py = [&](double y) { return height - pad - (y - y_min) / (y_max - y_min) * (height - 2 * pad); };

    auto out = detail::open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << ' ' << height
        << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title
        << "</text>\n";
    // axes
    out << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad
        << "\" y2=\"" << height - pad << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\""
        << height - pad << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"" << height - pad + 28 << "\">" << format_double(x_min)
        << "</text>\n";
    out << "<text x=\"" << width - pad << "\" y=\"" << height - pad + 28
        << "\" text-anchor=\"end\">" << format_double(x_max) << "</text>\n";
    out << "<text x=\"" << pad - 6 << "\" y=\"" << height - pad
        << "\" text-anchor=\"end\">" << format_double(y_min) << "</text>\n";
    out << "<text x=\"" << pad - 6 << "\" y=\"" << pad + 4 << "\" text-anchor=\"end\">"
        << format_double(y_max) << "</text>\n";

    std::size_t legend_row = 0;
    for (const auto& s : series) {
        const std::size_t count = s.x.size();
        if (count == 0) continue;
        const std::size_t stride = count > 2000 ? (count + 1999) / 2000 : 1;
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
        if (s.dashed) out << " stroke-dasharray=\"6 4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < count; i += stride)
            out << detail::svg_coord(px(s.x[i])) << ',' << detail::svg_coord(py(s.y[i])) << ' ';
        if ((count - 1) % stride != 0)  // always keep the last point
            out << detail::svg_coord(px(s.x[count - 1])) << ','
                << detail::svg_coord(py(s.y[count - 1]));
        out << "\"/>\n";
        out << "<text x=\"" << width - pad - 170 << "\" y=\"" << pad + 16 * (legend_row + 1)
            << "\" fill=\"" << s.color << "\">" << s.label << "</text>\n";
        ++legend_row;
    }
    out << "</svg>\n";
}

/// Equity and buy-and-hold curves for one run.
inline void write_equity_svg(const BacktestReport& report, const std::string& path) {
    ChartSeries strategy{"strategy", {}, {}, "#1f6fb4", false};
    ChartSeries baseline{"buy-and-hold", {}, {}, "#888888", true};
    for (std::size_t i = 0; i < report.equity.size(); ++i) {
        strategy.x.push_back(static_cast<double>(i));
        strategy.y.push_back(report.equity[i]);
        baseline.x.push_back(static_cast<double>(i));
        baseline.y.push_back(report.baseline_equity[i]);
    }
    write_line_chart(path, "equity vs. buy-and-hold", {strategy, baseline});
}

}  // namespace cvartrade
