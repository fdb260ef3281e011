// Command-line front end: `run` backtests one price file, `sweep` grids
// over (gamma, delta, seed), and `synth` generates seeded price fixtures.
// Exit codes: 0 success, 1 data/runtime failure, 2 usage error.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "cvartrade/cvartrade.hpp"

namespace fs = std::filesystem;
using namespace cvartrade;

namespace {

/// Command-line misuse detected after CLI11 parsing; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Applies `key=value` lines from a config file as defaults for options of
/// `cmd` that were not given on the command line, so precedence is
/// flags > file > built-in defaults. Keys mirror long flag names without
/// the leading dashes; blank lines and #-comments are skipped.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    const auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t");
        if (begin == std::string::npos) return std::string();
        return s.substr(begin, s.find_last_not_of(" \t") - begin + 1);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + " line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        CLI::Option* option = key == "config" ? nullptr : cmd.get_option_no_throw("--" + key);
        if (option == nullptr)
            throw UsageError(path + " line " + std::to_string(lineno) + ": unknown key '" + key +
                             "'");
        if (option->count() > 0) continue;  // the command-line flag wins
        try {
            option->add_result(value.empty() ? "true" : value);
            option->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError(path + " line " + std::to_string(lineno) + ": key '" + key +
                             "': " + e.what());
        }
    }
}

/// Learner flags shared by `run` and `sweep`. Holds strings for enum-like
/// flags; converted onto a LearnerConfig after parsing.
struct BaseFlags {
    LearnerConfig config;
    std::string activation = "linear";

    void attach(CLI::App& cmd, bool with_cell_axes) {
        const auto interval = [](double lo, double hi, bool lo_open, bool hi_open,
                                 const std::string& what) {
            return CLI::Validator(
                [=](std::string& s) -> std::string {
                    double v = 0.0;
                    try {
                        v = std::stod(s);
                    } catch (const std::exception&) {
                        return "not a number: " + s;
                    }
                    const bool lo_ok = lo_open ? v > lo : v >= lo;
                    const bool hi_ok = hi_open ? v < hi : v <= hi;
                    return (lo_ok && hi_ok) ? "" : "value must lie in " + what;
                },
                "FLOAT in " + what);
        };
        const auto unit_interval_open = interval(0.0, 1.0, false, true, "[0, 1)");
        const auto open_unit = interval(0.0, 1.0, true, true, "(0, 1)");
        const auto closed_unit = interval(0.0, 1.0, false, false, "[0, 1]");

        if (with_cell_axes) {
            cmd.add_option("--gamma", config.gamma, "tail level of the loss quantile")
                ->check(unit_interval_open)
                ->capture_default_str();
            cmd.add_option("--delta", config.delta, "proportional transaction cost rate")
                ->check(CLI::NonNegativeNumber)
                ->capture_default_str();
            cmd.add_option("--seed", config.seed, "seed echoed into reports")
                ->capture_default_str();
        }
        cmd.add_option("--alpha", config.alpha, "subgradient step size")
            ->check(open_unit)
            ->capture_default_str();
        cmd.add_option("--lambda", config.lambda, "L2-norm regularization weight")
            ->check(closed_unit)
            ->capture_default_str();
        cmd.add_option("--window", config.window_n,
                       "tail estimation window (0 = auto: 50, or 100 at gamma >= 0.99)")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd.add_option("--lags", config.lags, "past smoothed returns in the state")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd.add_option("--inner-iters", config.inner_iters, "subgradient iterations per step")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd.add_option("--activation", activation, "policy activation")
            ->check(CLI::IsMember({"linear", "tanh", "sigmoid"}))
            ->capture_default_str();
        cmd.add_option("--filter-span", config.filter_span, "EMA span for return smoothing")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd.add_flag("--long-only", config.long_only, "restrict positions to [0, 1]");
    }

    LearnerConfig resolve() const {
        LearnerConfig resolved = config;
        resolved.activation = *activation_from_string(activation);  // validated by CLI
        resolved.validate();
        return resolved;
    }
};

void write_run_artifacts(const BacktestReport& report, const fs::path& out_dir, bool svg) {
    fs::create_directories(out_dir);
    write_equity_csv(report, (out_dir / "equity_curve.csv").string());
    write_trades_csv(report, (out_dir / "trades.csv").string());
    write_metrics_json(report, (out_dir / "metrics.json").string());
    write_risk_csv(report, (out_dir / "risk_trace.csv").string());
    if (svg) write_equity_svg(report, (out_dir / "equity.svg").string());
}

int cmd_run(const std::string& data_path, const BaseFlags& flags, const std::string& out_dir,
            bool svg) {
    const LearnerConfig config = flags.resolve();
    const PriceSeries prices = load_prices(data_path);
    const BacktestReport report = run_online(prices, config);
    write_run_artifacts(report, out_dir, svg);
    std::cout << "steps=" << report.steps << " total_return=" << format_double(report.total_return)
              << " mdd=" << format_double(report.mdd)
              << " downside_variance=" << format_double(report.downside_variance) << '\n';
    return 0;
}

struct SweepCell {
    double gamma = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    BacktestReport report;
    std::string error;  // empty on success
};

std::string cell_dir_name(const SweepCell& cell) {
    return "g" + format_double(cell.gamma) + "_d" + format_double(cell.delta) + "_s" +
           std::to_string(cell.seed);
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

int cmd_sweep(const std::string& data_path, const std::string& synth_model,
              std::size_t synth_steps, const BaseFlags& flags, std::vector<double> gammas,
              std::vector<double> deltas, std::vector<std::uint64_t> seeds,
              const std::string& out_dir, int jobs) {
    const LearnerConfig base = flags.resolve();
    if (deltas.empty()) deltas.push_back(base.delta);
    if (seeds.empty()) seeds.push_back(base.seed);

    std::optional<PriceSeries> shared_prices;
    std::optional<SynthModel> model;
    if (!synth_model.empty()) {
        model = synth_model_from_string(synth_model);
    } else {
        shared_prices = load_prices(data_path);
    }

    std::vector<SweepCell> cells;
    for (double gamma : gammas)
        for (double delta : deltas)
            for (std::uint64_t seed : seeds) cells.push_back(SweepCell{gamma, delta, seed});

    fs::create_directories(out_dir);
    std::vector<SweepResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));

    const auto run_cell = [&](std::size_t index) {
        const SweepCell& cell = cells[index];
        LearnerConfig config = base;
        config.gamma = cell.gamma;
        config.delta = cell.delta;
        config.seed = cell.seed;
        try {
            config.validate();
            PriceSeries series;
            if (model) {
                SynthSpec spec;
                spec.model = *model;
                spec.steps = synth_steps;
                spec.seed = cell.seed;
                series = generate_prices(spec);
            } else {
                series = *shared_prices;
            }
            results[index].report = run_online(series, config);
            const fs::path cell_dir = fs::path(out_dir) / cell_dir_name(cell);
            fs::create_directories(cell_dir);
            write_metrics_json(results[index].report, (cell_dir / "metrics.json").string());
            write_equity_csv(results[index].report, (cell_dir / "equity_curve.csv").string());
        } catch (const std::exception& e) {
            results[index].error = e.what();
        }
    };

    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_cell(i);
            });
        for (auto& t : pool) t.join();
    }

    // Summary rows in cell order, independent of scheduling.
    {
        std::ofstream summary(fs::path(out_dir) / "sweep_summary.csv", std::ios::binary);
        if (!summary) throw IoError("cannot open for writing: " + out_dir + "/sweep_summary.csv");
        summary << "gamma,delta,seed,total_return,mdd,downside_variance\n";
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!results[i].error.empty()) continue;
            summary << format_double(cells[i].gamma) << ',' << format_double(cells[i].delta)
                    << ',' << cells[i].seed << ','
                    << format_double(results[i].report.total_return) << ','
                    << format_double(results[i].report.mdd) << ','
                    << format_double(results[i].report.downside_variance) << '\n';
        }
    }

    // Per-delta medians across seeds, one chart per metric.
    const char* palette[] = {"#1f6fb4", "#c23b22", "#2e8b57", "#8a2be2", "#b8860b", "#444444"};
    struct MetricChart {
        const char* file;
        const char* title;
        double BacktestReport::* field;
    };
    const MetricChart charts[] = {
        {"sweep_total_return.svg", "median total return vs. gamma", &BacktestReport::total_return},
        {"sweep_mdd.svg", "median max drawdown vs. gamma", &BacktestReport::mdd},
        {"sweep_downside_variance.svg", "median downside variance vs. gamma",
         &BacktestReport::downside_variance},
    };
    std::vector<double> sorted_gammas = gammas;
    std::sort(sorted_gammas.begin(), sorted_gammas.end());
    for (const auto& chart : charts) {
        std::vector<ChartSeries> series;
        std::size_t color = 0;
        for (double delta : deltas) {
            ChartSeries s;
            s.label = "delta=" + format_double(delta);
            s.color = palette[color++ % 6];
            for (double gamma : sorted_gammas) {
                std::vector<double> values;
                for (std::size_t i = 0; i < cells.size(); ++i)
                    if (cells[i].gamma == gamma && cells[i].delta == delta &&
                        results[i].error.empty())
                        values.push_back(results[i].report.*(chart.field));
                if (values.empty()) continue;
                s.x.push_back(gamma);
                s.y.push_back(median(values));
            }
            series.push_back(std::move(s));
        }
        write_line_chart((fs::path(out_dir) / chart.file).string(), chart.title, series);
    }

    std::size_t failed = 0;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (!results[i].error.empty()) {
            ++failed;
            std::cerr << "cell " << cell_dir_name(cells[i]) << " failed: " << results[i].error
                      << '\n';
        }
    std::cout << "cells=" << cells.size() - failed << "/" << cells.size() << " written to "
              << out_dir << '\n';
    return failed == 0 ? 0 : 1;
}

int cmd_synth(const std::string& model_name, std::size_t steps, std::uint64_t seed,
              double start_price, const std::string& out_file) {
    SynthSpec spec;
    spec.model = *synth_model_from_string(model_name);  // validated by CLI
    spec.steps = steps;
    spec.seed = seed;
    spec.start_price = start_price;
    const PriceSeries series = generate_prices(spec);
    write_prices_csv(series, out_file);
    std::cout << "wrote " << series.size() << " rows to " << out_file << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online tail-risk trading engine: learns a trading policy by descending the"
                 " rolling CVaR of its losses"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "backtest one price series");
    std::string run_config;
    run->add_option("--config", run_config, "read flag defaults from a key=value file");
    std::string run_data;
    std::string run_out = "out";
    bool run_svg = false;
    BaseFlags run_flags;
    run->add_option("--data", run_data, "CSV price file (timestamp,price)")->required();
    run_flags.attach(*run, /*with_cell_axes=*/true);
    run->add_option("--out", run_out, "output directory")->capture_default_str();
    run->add_flag("--svg", run_svg, "also write equity.svg");

    // --- sweep -------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "grid of runs over (gamma, delta, seed)");
    std::string sweep_config;
    sweep->add_option("--config", sweep_config, "read flag defaults from a key=value file");
    std::string sweep_data;
    std::string sweep_model;
    std::size_t sweep_steps = 5000;
    std::string sweep_out = "sweep";
    int sweep_jobs = 1;
    std::vector<double> gammas;
    std::vector<double> deltas;
    std::vector<std::uint64_t> seeds;
    BaseFlags sweep_flags;
    auto* sweep_source = sweep->add_option("--data", sweep_data, "CSV price file shared by all cells");
    auto* sweep_synth = sweep->add_option("--synth", sweep_model,
                                          "generate one series per cell seed instead")
                            ->check(CLI::IsMember({"trend", "meanrevert", "regime-switch",
                                                   "random-walk"}));
    sweep_source->excludes(sweep_synth);
    sweep->add_option("--steps", sweep_steps, "rows per generated series (with --synth)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep->add_option("--gammas", gammas, "comma-separated tail levels")
        ->required()
        ->delimiter(',');
    sweep->add_option("--deltas", deltas, "comma-separated cost rates")->delimiter(',');
    sweep->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',');
    sweep_flags.attach(*sweep, /*with_cell_axes=*/false);
    sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
    sweep->add_option("--jobs", sweep_jobs, "worker threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    // --- synth -------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic price CSV");
    std::string synth_model;
    std::size_t synth_steps = 5000;
    std::uint64_t synth_seed = 0;
    double synth_start = 100.0;
    std::string synth_out = "prices.csv";
    synth->add_option("--model", synth_model, "price model")
        ->required()
        ->check(CLI::IsMember({"trend", "meanrevert", "regime-switch", "random-walk"}));
    synth->add_option("--steps", synth_steps, "rows to generate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--start-price", synth_start, "first price")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--out", synth_out, "output CSV file")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n(see --help)\n";
        return 2;
    }

    try {
        if (run->parsed()) {
            if (!run_config.empty()) apply_config_file(*run, run_config);
            return cmd_run(run_data, run_flags, run_out, run_svg);
        }
        if (sweep->parsed()) {
            if (!sweep_config.empty()) apply_config_file(*sweep, sweep_config);
            if (sweep_data.empty() && sweep_model.empty()) {
                std::cerr << "usage error: sweep needs either --data or --synth\n(see --help)\n";
                return 2;
            }
            return cmd_sweep(sweep_data, sweep_model, sweep_steps, sweep_flags, gammas, deltas,
                             seeds, sweep_out, sweep_jobs);
        }
        if (synth->parsed()) return cmd_synth(synth_model, synth_steps, synth_seed, synth_start,
                                              synth_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n(see --help)\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
