#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/lag_grid.hpp"
#include "sparsetde/parallel.hpp"
#include "sparsetde/params_io.hpp"
#include "sparsetde/random.hpp"
#include "sparsetde/simulate.hpp"
#include "sparsetde/tde.hpp"
#include "sparsetde/text.hpp"

namespace sparsetde {

/// Smallest of 0.4, 0.5 and 1 whose restricted grid still contains tau.
[[nodiscard]] inline double auto_grid_fraction(std::size_t n, int tau) {
    for (double f : {0.4, 0.5}) {
        if (restricted_half_width(n, f) >= std::abs(tau)) return f;
    }
    return 1.0;
}

/// One Monte Carlo cell: region x tau x amount mean.
struct ScenarioConfig {
    std::string region = "custom";
    TransitionMatrix transitions{0.22, 0.46};
    ImpulseSpec impulse;
    double amount_mean = 0.125;  // lambda: mean of the exponential amounts
    std::size_t reps = 200;
    std::optional<double> grid_fraction;  // empty: auto_grid_fraction
    std::vector<EstimatorSpec> estimators = all_estimators();
    std::uint64_t root_seed = 1;
    LassoSettings lasso;
    bool keep_raw = true;

    void validate() const {
        impulse.validate();
        if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
        if (!(amount_mean >= 0.0) || !std::isfinite(amount_mean)) {
            throw Error(ErrorCode::InvalidArgument, "amount mean must be a finite number >= 0");
        }
        if (grid_fraction && !(*grid_fraction > 0.0 && *grid_fraction <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "grid fraction must lie in (0, 1]");
        }
        if (estimators.empty()) throw Error(ErrorCode::InvalidArgument, "no estimators configured");
        for (const auto& e : estimators) e.validate();
    }

    [[nodiscard]] double effective_grid_fraction() const {
        return grid_fraction.value_or(auto_grid_fraction(impulse.n, impulse.tau));
    }
};

struct EstimatorSummary {
    EstimatorSpec spec;
    std::size_t scored = 0;
    std::size_t failures = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();   // divisor R - 1; 0 when R = 1
    double mse = std::numeric_limits<double>::quiet_NaN();  // mean squared error against tau
    std::map<std::string, std::size_t> failure_reasons;
    std::vector<std::optional<int>> raw;  // per replicate; empty for failures
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<EstimatorSummary> estimators;
    std::vector<std::uint64_t> seeds;
    double seconds = 0.0;
};

/// (1/R) * sum (lag - tau)^2
[[nodiscard]] inline double mse_from_results(std::span<const double> lags, double tau) {
    if (lags.empty()) throw Error(ErrorCode::Empty, "no scored replicates");
    double acc = 0.0;
    for (double l : lags) acc += (l - tau) * (l - tau);
    return acc / static_cast<double>(lags.size());
}

namespace detail {

inline void summarize(EstimatorSummary& s, std::span<const std::optional<int>> lags, int tau) {
    std::vector<double> ok;
    for (const auto& l : lags) {
        if (l) ok.push_back(*l);
    }
    s.scored = ok.size();
    s.failures = lags.size() - ok.size();
    if (ok.empty()) return;
    double mean = 0.0;
    for (double v : ok) mean += v;
    mean /= static_cast<double>(ok.size());
    double ss = 0.0;
    for (double v : ok) ss += (v - mean) * (v - mean);
    s.mean = mean;
    s.sd = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
    s.mse = mse_from_results(ok, tau);
}

}  // namespace detail

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Replicate r uses seed replicate_seed(root_seed, r), so cells that share a
/// root seed see the same random draws. Every estimator runs on the same pair.
[[nodiscard]] inline ScenarioResult run_scenario(const ScenarioConfig& config,
                                                 std::size_t threads = default_parallelism(),
                                                 const ProgressFn& progress = {}) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const LagGrid grid = restrict_grid(config.impulse.n, config.effective_grid_fraction());
    const std::size_t R = config.reps;
    const std::size_t E = config.estimators.size();

    std::vector<std::vector<std::optional<int>>> lags(E, std::vector<std::optional<int>>(R));
    std::vector<std::vector<std::string>> reasons(E, std::vector<std::string>(R));
    std::vector<std::uint64_t> seeds(R);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    parallel_for(R, threads, [&](std::size_t r) {
        seeds[r] = replicate_seed(config.root_seed, r);
        const auto pair =
            simulate_pair(config.impulse, config.transitions, ScenarioAmount{config.amount_mean}, seeds[r]);
        std::optional<DelayEstimator> est;
        try {
            est.emplace(Signal(pair.x), Signal(pair.y), config.lasso);
        } catch (const Error& e) {
            for (std::size_t e_i = 0; e_i < E; ++e_i) reasons[e_i][r] = std::string(to_string(e.code()));
        }
        if (est) {
            for (std::size_t e_i = 0; e_i < E; ++e_i) {
                try {
                    lags[e_i][r] = est->estimate(grid, config.estimators[e_i]).lag_hat;
                } catch (const Error& e) {
                    reasons[e_i][r] = std::string(to_string(e.code()));
                }
            }
        }
        const std::size_t now = ++done;
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(now, R);
        }
    });

    ScenarioResult out;
    out.config = config;
    out.seeds = std::move(seeds);
    for (std::size_t e_i = 0; e_i < E; ++e_i) {
        EstimatorSummary s;
        s.spec = config.estimators[e_i];
        detail::summarize(s, lags[e_i], config.impulse.tau);
        for (const auto& why : reasons[e_i]) {
            if (!why.empty()) ++s.failure_reasons[why];
        }
        if (config.keep_raw) s.raw = std::move(lags[e_i]);
        out.estimators.push_back(std::move(s));
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

enum class TableFormat { Csv, Markdown };
enum class TableKind { MeanSd, Mse };

[[nodiscard]] inline TableFormat parse_table_format(std::string_view s) {
    if (s == "csv") return TableFormat::Csv;
    if (s == "markdown") return TableFormat::Markdown;
    throw Error(ErrorCode::InvalidArgument, "unknown format '" + std::string(s) + "' (csv or markdown)");
}

namespace detail {

/// Three decimals with trailing zeros dropped: 37.000 -> 37, 38.550 -> 38.55.
inline std::string short_decimal(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

inline std::string number_or_na(double v) { return std::isnan(v) ? "NA" : format_number(v); }

struct TableLayout {
    std::vector<std::string> regions;
    std::vector<std::pair<int, double>> columns;  // (tau, lambda)
    std::vector<std::string> estimators;
    std::map<std::tuple<std::string, int, double, std::string>, const EstimatorSummary*> cells;
};

inline TableLayout layout_of(const std::vector<ScenarioResult>& results) {
    TableLayout t;
    for (const auto& r : results) {
        const auto& c = r.config;
        if (std::find(t.regions.begin(), t.regions.end(), c.region) == t.regions.end()) t.regions.push_back(c.region);
        const std::pair<int, double> col{c.impulse.tau, c.amount_mean};
        if (std::find(t.columns.begin(), t.columns.end(), col) == t.columns.end()) t.columns.push_back(col);
        for (const auto& e : r.estimators) {
            if (std::find(t.estimators.begin(), t.estimators.end(), e.spec.name) == t.estimators.end()) {
                t.estimators.push_back(e.spec.name);
            }
            t.cells[{c.region, c.impulse.tau, c.amount_mean, e.spec.name}] = &e;
        }
    }
    std::sort(t.columns.begin(), t.columns.end());
    return t;
}

inline std::string column_label(const std::pair<int, double>& col) {
    return "tau=" + std::to_string(col.first) + " lambda=" + format_number(col.second);
}

}  // namespace detail

/// Mean/sd or MSE table: one block per region, estimators as rows, one
/// column per (tau, lambda) sorted by tau then lambda. CSV cells carry exact
/// round-trip numbers; markdown cells are rounded to three decimals.
[[nodiscard]] inline std::string emit_table(const std::vector<ScenarioResult>& results, TableKind kind,
                                            TableFormat format) {
    if (results.empty()) throw Error(ErrorCode::Empty, "no scenario results to tabulate");
    const auto t = detail::layout_of(results);
    std::ostringstream out;

    auto cell = [&](const EstimatorSummary* s) -> std::string {
        if (!s) return format == TableFormat::Csv ? "" : "-";
        if (format == TableFormat::Csv) {
            if (kind == TableKind::Mse) return detail::number_or_na(s->mse);
            return detail::number_or_na(s->mean) + " (" + detail::number_or_na(s->sd) + ")";
        }
        std::string text = kind == TableKind::Mse
                               ? detail::short_decimal(s->mse)
                               : detail::short_decimal(s->mean) + " (" + detail::short_decimal(s->sd) + ")";
        if (s->failures) text += " [" + std::to_string(s->failures) + " failed]";
        return text;
    };

    if (format == TableFormat::Csv) {
        out << "region,estimator";
        for (const auto& col : t.columns) out << ',' << detail::column_label(col);
        out << '\n';
    }
    for (std::size_t b = 0; b < t.regions.size(); ++b) {
        const auto& region = t.regions[b];
        if (format == TableFormat::Markdown) {
            if (b) out << '\n';
            out << "### " << region << "\n\n| TDE |";
            for (const auto& col : t.columns) out << ' ' << detail::column_label(col) << " |";
            out << "\n|---|";
            for (std::size_t c = 0; c < t.columns.size(); ++c) out << "---|";
            out << '\n';
        }
        for (const auto& est : t.estimators) {
            if (format == TableFormat::Csv) {
                out << region << ',' << est;
            } else {
                out << "| " << display_name(est) << " |";
            }
            for (const auto& col : t.columns) {
                const auto it = t.cells.find({region, col.first, col.second, est});
                const auto text = cell(it == t.cells.end() ? nullptr : it->second);
                if (format == TableFormat::Csv) {
                    out << ',' << text;
                } else {
                    out << ' ' << text << " |";
                }
            }
            out << '\n';
        }
    }
    return out.str();
}

/// One cell read back from a CSV table.
struct TableEntry {
    std::string region;
    std::string estimator;
    int tau = 0;
    double lambda = 0.0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
    double mse = std::numeric_limits<double>::quiet_NaN();
};

[[nodiscard]] inline std::vector<TableEntry> parse_table_csv(const std::string& text, TableKind kind) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty table");
    const auto header = detail::split(line, ',');
    if (header.size() < 2 || header[0] != "region" || header[1] != "estimator") {
        throw Error(ErrorCode::Parse, "line 1: expected 'region,estimator,...' header");
    }
    std::vector<std::pair<int, double>> cols;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const auto& h = header[c];
        const auto sp = h.find(' ');
        if (h.rfind("tau=", 0) != 0 || sp == std::string::npos || h.compare(sp + 1, 7, "lambda=") != 0) {
            throw Error(ErrorCode::Parse, "line 1: bad column label '" + h + "'");
        }
        cols.emplace_back(static_cast<int>(detail::parse_integer(h.substr(4, sp - 4), "line 1")),
                          detail::parse_double(h.substr(sp + 8), "line 1"));
    }
    auto number = [](const std::string& s, const std::string& ctx) {
        return s == "NA" ? std::numeric_limits<double>::quiet_NaN() : detail::parse_double(s, ctx);
    };
    std::vector<TableEntry> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = detail::line_context(line_no);
        const auto cells = detail::split(line, ',');
        if (cells.size() != header.size()) throw Error(ErrorCode::Parse, ctx + ": wrong number of cells");
        for (std::size_t c = 2; c < cells.size(); ++c) {
            if (cells[c].empty()) continue;
            TableEntry e{cells[0], cells[1], cols[c - 2].first, cols[c - 2].second};
            if (kind == TableKind::Mse) {
                e.mse = number(cells[c], ctx);
            } else {
                const auto open = cells[c].find(" (");
                if (open == std::string::npos || cells[c].back() != ')') {
                    throw Error(ErrorCode::Parse, ctx + ": expected 'mean (sd)'");
                }
                e.mean = number(cells[c].substr(0, open), ctx);
                e.sd = number(cells[c].substr(open + 2, cells[c].size() - open - 3), ctx);
            }
            out.push_back(std::move(e));
        }
    }
    return out;
}

/// Replicate-level lags: one row per (cell, estimator, replicate).
[[nodiscard]] inline std::string emit_raw(const std::vector<ScenarioResult>& results) {
    std::ostringstream out;
    out << "region,tau,lambda,estimator,replicate,seed,lag_hat,status\n";
    for (const auto& r : results) {
        for (const auto& e : r.estimators) {
            for (std::size_t i = 0; i < e.raw.size(); ++i) {
                out << r.config.region << ',' << r.config.impulse.tau << ',' << format_number(r.config.amount_mean)
                    << ',' << e.spec.name << ',' << i << ',' << r.seeds[i] << ',';
                if (e.raw[i]) {
                    out << *e.raw[i] << ",ok\n";
                } else {
                    out << ",failed\n";
                }
            }
        }
    }
    return out.str();
}

/// Key-value benchmark description ('#' comments):
///
///   params           = data/regions.ini   (optional; built-in regions otherwise)
///   regions          = Madrense, Mezquital | all
///   taus             = 37, 110, 183
///   lambdas          = 0.125, 0.5, 2.5
///   estimators       = pn, lasso-cv | all
///   reps             = 200
///   n                = 366
///   seed             = 20190601
///   sigma_d          = 0.0075
///   grid_fraction    = auto | 0.4
///   support_start    = 110
///   support_end      = 183
///   cv_folds         = 10   (0 = leave-one-out)
///   path_length      = 100
///   lambda_min_ratio = 0.001
struct BenchConfig {
    std::optional<std::string> params_path;
    std::vector<std::string> regions;  // empty: all regions in the parameter set
    std::vector<int> taus{37, 110, 183};
    std::vector<double> lambdas{0.125, 0.5, 2.5};
    std::vector<std::string> estimators{kEstimatorNames.begin(), kEstimatorNames.end()};
    std::size_t reps = 200;
    std::size_t n = 366;
    std::uint64_t seed = 20190601;
    double sigma_d = 0.0075;
    std::optional<double> grid_fraction;
    std::size_t support_start = 110;
    std::size_t support_end = 183;
    std::size_t cv_folds = kDefaultCvFolds;
    PathOptions path;
};

[[nodiscard]] inline BenchConfig parse_bench_config(std::istream& in) {
    BenchConfig c;
    std::string raw;
    std::size_t line_no = 0;
    auto positive = [](long long v, const std::string& ctx, const std::string& key) {
        if (v < 1) throw Error(ErrorCode::Parse, ctx + ": " + key + " must be >= 1");
        return static_cast<std::size_t>(v);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto ctx = detail::line_context(line_no);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::Parse, ctx + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (value.empty()) throw Error(ErrorCode::Parse, ctx + ": empty value for '" + key + "'");
        if (key == "params") {
            c.params_path = value;
        } else if (key == "regions") {
            c.regions.clear();
            if (value != "all") c.regions = detail::split(value, ',');
        } else if (key == "taus") {
            c.taus.clear();
            for (const auto& v : detail::split(value, ',')) c.taus.push_back(static_cast<int>(detail::parse_integer(v, ctx)));
        } else if (key == "lambdas") {
            c.lambdas.clear();
            for (const auto& v : detail::split(value, ',')) c.lambdas.push_back(detail::parse_double(v, ctx));
        } else if (key == "estimators") {
            c.estimators.clear();
            if (value == "all") {
                c.estimators.assign(kEstimatorNames.begin(), kEstimatorNames.end());
            } else {
                for (const auto& v : detail::split(value, ',')) {
                    try {
                        (void)named_estimator(v);
                    } catch (const Error& e) {
                        throw Error(ErrorCode::Parse, ctx + ": " + e.what());
                    }
                    c.estimators.push_back(v);
                }
            }
        } else if (key == "reps") {
            c.reps = positive(detail::parse_integer(value, ctx), ctx, key);
        } else if (key == "n") {
            c.n = positive(detail::parse_integer(value, ctx), ctx, key);
        } else if (key == "seed") {
            const long long s = detail::parse_integer(value, ctx);
            if (s < 0) throw Error(ErrorCode::Parse, ctx + ": seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(s);
        } else if (key == "sigma_d") {
            c.sigma_d = detail::parse_double(value, ctx);
        } else if (key == "grid_fraction") {
            if (value == "auto") {
                c.grid_fraction.reset();
            } else {
                c.grid_fraction = detail::parse_double(value, ctx);
            }
        } else if (key == "support_start") {
            c.support_start = positive(detail::parse_integer(value, ctx), ctx, key);
        } else if (key == "support_end") {
            c.support_end = positive(detail::parse_integer(value, ctx), ctx, key);
        } else if (key == "cv_folds") {
            const long long f = detail::parse_integer(value, ctx);
            if (f < 0 || f == 1) throw Error(ErrorCode::Parse, ctx + ": cv_folds must be 0 or >= 2");
            c.cv_folds = static_cast<std::size_t>(f);
        } else if (key == "path_length") {
            c.path.length = positive(detail::parse_integer(value, ctx), ctx, key);
        } else if (key == "lambda_min_ratio") {
            c.path.lambda_min_ratio = detail::parse_double(value, ctx);
        } else {
            throw Error(ErrorCode::Parse, ctx + ": unknown key '" + key + "'");
        }
    }
    if (c.taus.empty() || c.lambdas.empty() || c.estimators.empty()) {
        throw Error(ErrorCode::Parse, "taus, lambdas and estimators must be nonempty");
    }
    return c;
}

[[nodiscard]] inline BenchConfig load_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open scenario config '" + path + "'");
    try {
        return parse_bench_config(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

/// One ScenarioConfig per (region, tau, lambda), in that nesting order.
[[nodiscard]] inline std::vector<ScenarioConfig> expand_cells(const BenchConfig& bench,
                                                              const std::vector<RegionParams>& params) {
    std::vector<const RegionParams*> regions;
    if (bench.regions.empty()) {
        for (const auto& r : params) regions.push_back(&r);
    } else {
        for (const auto& name : bench.regions) regions.push_back(&find_region(params, name));
    }
    std::vector<EstimatorSpec> estimators;
    for (const auto& name : bench.estimators) estimators.push_back(named_estimator(name, bench.cv_folds));

    std::vector<ScenarioConfig> cells;
    for (const auto* region : regions) {
        for (int tau : bench.taus) {
            for (double lambda : bench.lambdas) {
                ScenarioConfig c;
                c.region = region->name;
                c.transitions = region->transitions;
                c.impulse.n = bench.n;
                c.impulse.support_start = bench.support_start;
                c.impulse.support_end = bench.support_end;
                c.impulse.tau = tau;
                c.impulse.sigma_d = bench.sigma_d;
                c.amount_mean = lambda;
                c.reps = bench.reps;
                c.grid_fraction = bench.grid_fraction;
                c.estimators = estimators;
                c.root_seed = bench.seed;
                c.lasso.path = bench.path;
                c.validate();
                cells.push_back(std::move(c));
            }
        }
    }
    return cells;
}

}  // namespace sparsetde
