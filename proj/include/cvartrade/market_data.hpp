#pragma once

// Price ingestion and feature construction: CSV loading, simple returns,
// exponential smoothing, and the lagged state vector fed to the policy.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cvartrade/errors.hpp"

namespace cvartrade {

/// A time series of strictly positive prices at strictly increasing
/// timestamps (seconds since the epoch, or any increasing integer key).
struct PriceSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> prices;

    std::size_t size() const { return prices.size(); }
};

/// Per-step simple returns, r[j] = p[j+1]/p[j] - 1.
using ReturnSeries = std::vector<double>;

/// Policy input x_t = [y_t, y_{t-1}, ..., y_{t-n}, 1]; the trailing
/// constant is the bias input, so dimension() == n + 2.
struct StateVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    double value = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

inline std::optional<std::int64_t> parse_epoch(std::string_view s) {
    std::int64_t value = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS", with
// an optional trailing "Z". Interpreted as UTC.
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    std::string text(s);
    if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) text.pop_back();
    for (const char* format : {"%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d"}) {
        std::tm tm{};
        std::istringstream stream(text);
        stream >> std::get_time(&tm, format);
        if (!stream.fail() && stream.peek() == std::istringstream::traits_type::eof()) {
            tm.tm_isdst = 0;
            return static_cast<std::int64_t>(timegm(&tm));
        }
    }
    return std::nullopt;
}

inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (auto epoch = parse_epoch(s)) return epoch;
    return parse_iso8601(s);
}

}  // namespace detail

/// Reads a two-column CSV (timestamp, price). A header row is detected by
/// the price field of the first line failing to parse as a number.
/// Timestamps may be integer epoch seconds or ISO-8601 datetimes.
inline PriceSeries load_prices(std::istream& in) {
    PriceSeries series;
    std::string line;
    std::size_t line_no = 0;
    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;

        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError(line_no, "expected two comma-separated fields");
        const std::string_view ts_field = std::string_view(line).substr(0, comma);
        std::string_view price_field = std::string_view(line).substr(comma + 1);
        if (price_field.find(',') != std::string_view::npos)
            throw ParseError(line_no, "expected exactly two fields");

        const auto price = detail::parse_double(price_field);
        if (!saw_data && !price) continue;  // header row
        if (!price)
            throw ParseError(line_no, "unparseable price '" + std::string(detail::trim(price_field)) + "'");
        if (!(*price > 0.0) || !std::isfinite(*price))
            throw ParseError(line_no, "price must be finite and positive");

        const auto ts = detail::parse_timestamp(ts_field);
        if (!ts)
            throw ParseError(line_no, "unparseable timestamp '" + std::string(detail::trim(ts_field)) + "'");
        if (!series.timestamps.empty() && *ts <= series.timestamps.back())
            throw OrderingError("line " + std::to_string(line_no) +
                                ": timestamps must be strictly increasing");

        series.timestamps.push_back(*ts);
        series.prices.push_back(*price);
        saw_data = true;
    }
    if (series.prices.empty()) throw EmptyInputError("no data rows in input");
    return series;
}

/// Opens `path` and delegates to load_prices(istream).
inline PriceSeries load_prices(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("file not found or unreadable: " + path);
    return load_prices(file);
}

/// Simple returns between consecutive prices. Needs at least two prices.
inline ReturnSeries compute_returns(const PriceSeries& series) {
    if (series.size() < 2)
        throw InsufficientDataError("need at least two prices to compute returns");
    ReturnSeries returns;
    returns.reserve(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i)
        returns.push_back(series.prices[i + 1] / series.prices[i] - 1.0);
    return returns;
}

/// Exponential moving average with smoothing factor 2/(span+1), seeded with
/// the first raw value; span == 1 reproduces the input unchanged.
inline ReturnSeries filter_returns(const ReturnSeries& returns, int span) {
    if (span < 1) throw ParameterError("filter span must be >= 1");
    ReturnSeries filtered;
    filtered.reserve(returns.size());
    const double weight = 2.0 / (static_cast<double>(span) + 1.0);
    double value = 0.0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        value = (i == 0) ? returns[0] : weight * returns[i] + (1.0 - weight) * value;
        filtered.push_back(value);
    }
    return filtered;
}

/// Lagged state at index t: [y_t, y_{t-1}, ..., y_{t-n}, 1].
inline StateVector make_state(const ReturnSeries& filtered, std::size_t t, std::size_t n) {
    if (t >= filtered.size())
        throw InsufficientDataError("state index beyond available history");
    if (t < n)
        throw InsufficientDataError("insufficient history: need " + std::to_string(n) +
                                    " lags before index " + std::to_string(t));
    StateVector state;
    state.values.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k) state.values.push_back(filtered[t - k]);
    state.values.push_back(1.0);
    return state;
}

}  // namespace cvartrade
