// sparsetde command-line front end: estimate, fit-params, simulate, bench.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparsetde/sparsetde.hpp"

namespace {

using namespace sparsetde;
using nlohmann::json;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Provenance record written next to every output file.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json parameters = json::object();
    json seeds = json::array();
    std::string started = utc_now();

    void write_for(const std::string& output) const {
        json doc{{"command", command},
                 {"arguments", argv},
                 {"parameters", parameters},
                 {"seeds", seeds},
                 {"output", output},
                 {"software", {{"name", "sparsetde"}, {"version", kVersion}}},
                 {"threads", default_parallelism()},
                 {"started", started},
                 {"finished", utc_now()}};
        std::ofstream out(output + ".manifest.json");
        if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write manifest for '" + output + "'");
        out << doc.dump(2) << '\n';
    }
};

// Writes text to `path` (plus manifest), or to stdout when path is empty.
void deliver(const std::string& path, const std::string& text, const Manifest& manifest) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
    out << text;
    out.close();
    manifest.write_for(path);
}

// "table.csv" -> "table.mse.csv"
std::string sibling(const std::string& path, const std::string& tag) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "." + tag;
    return path.substr(0, dot) + "." + tag + path.substr(dot);
}

std::vector<EstimatorSpec> parse_estimators(const std::string& list, std::size_t folds) {
    if (list == "all") return all_estimators(folds);
    std::vector<EstimatorSpec> out;
    for (const auto& name : detail::split(list, ',')) out.push_back(named_estimator(name, folds));
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no estimator given");
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
    std::string input;
    SeriesColumns cols;
    std::string id_col, year_col;
    std::string estimator = "pn";
    double grid_fraction = 0.4;
    double alpha = 0.05;
    std::size_t cv_folds = kDefaultCvFolds;
    std::string out, summary;
};

struct EstimateRow {
    std::optional<TdeResult> result;
    std::string estimator;
    std::string reason;
};

int run_estimate(const EstimateOptions& o, Manifest manifest) {
    SeriesColumns cols = o.cols;
    if (!o.id_col.empty()) cols.id = o.id_col;
    if (!o.year_col.empty()) cols.year = o.year_col;
    const auto records = load_series(o.input, cols);
    const auto specs = parse_estimators(o.estimator, o.cv_folds);
    if (!(o.alpha > 0.0 && o.alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "--alpha must lie in (0, 1]");

    std::vector<std::vector<EstimateRow>> rows(records.size());
    parallel_for(records.size(), default_parallelism(), [&](std::size_t i) {
        const auto& rec = records[i];
        std::optional<DelayEstimator> est;
        std::optional<LagGrid> grid;
        std::string setup_error;
        try {
            grid = restrict_grid(rec.x.size(), o.grid_fraction);
            est.emplace(Signal(rec.x), Signal(rec.y));
        } catch (const Error& e) {
            setup_error = e.what();
        }
        for (const auto& spec : specs) {
            EstimateRow row{std::nullopt, spec.name, setup_error};
            if (est) {
                try {
                    row.result = est->estimate(*grid, spec);
                } catch (const Error& e) {
                    row.reason = e.what();
                }
            }
            rows[i].push_back(std::move(row));
        }
    });

    std::ostringstream doc;
    doc << "id,year,estimator,lag_hat,gamma,p_value,significant,overlap,lambda,status,reason\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (const auto& row : rows[i]) {
            doc << csv_field(records[i].id) << ',' << csv_field(records[i].year) << ',' << row.estimator << ',';
            if (row.result) {
                const auto& r = *row.result;
                doc << r.lag_hat << ',' << format_number(r.gamma_at_lag) << ',' << format_number(r.p_value) << ','
                    << (r.p_value < o.alpha ? "true" : "false") << ',' << r.overlap_length << ','
                    << (r.lambda ? format_number(*r.lambda) : "") << ",ok,\n";
            } else {
                doc << ",,,,,,failed," << csv_field(row.reason) << '\n';
            }
        }
    }
    manifest.parameters = {{"input", o.input},          {"estimator", o.estimator}, {"grid_fraction", o.grid_fraction},
                           {"alpha", o.alpha},          {"cv_folds", o.cv_folds},   {"x_col", cols.x},
                           {"y_col", cols.y},           {"id_col", o.id_col},       {"year_col", o.year_col},
                           {"series", records.size()}};
    deliver(o.out, doc.str(), manifest);

    if (!o.summary.empty()) {
        // Per id and estimator: median and robust sd of the significant yearly lags.
        std::ostringstream sum;
        sum << "id,estimator,years,scored,significant_years,significant_fraction,median_lag,robust_sd\n";
        std::vector<std::string> ids;
        for (const auto& r : records) {
            if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
        }
        for (const auto& id : ids) {
            for (std::size_t e = 0; e < specs.size(); ++e) {
                std::size_t years = 0;
                std::vector<TdeResult> ok;
                for (std::size_t i = 0; i < records.size(); ++i) {
                    if (records[i].id != id) continue;
                    ++years;
                    if (rows[i][e].result) ok.push_back(*rows[i][e].result);
                }
                sum << csv_field(id) << ',' << specs[e].name << ',' << years << ',' << ok.size() << ',';
                if (ok.empty()) {
                    sum << "0,0,,\n";
                    continue;
                }
                const auto agg = aggregate_years(std::move(ok), o.alpha);
                sum << agg.significant_count << ',' << format_number(agg.significant_fraction) << ','
                    << (agg.median_lag ? format_number(*agg.median_lag) : "") << ','
                    << (agg.robust_sd ? format_number(*agg.robust_sd) : "") << '\n';
            }
        }
        deliver(o.summary, sum.str(), manifest);
    }
    return 0;
}

// -------------------------------------------------------------- fit-params

struct FitOptions {
    std::string input;
    std::string precip_col = "precip";
    std::string day_col = "day";
    std::string region = "fitted";
    std::string out;
};

int run_fit_params(const FitOptions& o, Manifest manifest) {
    std::ifstream in(o.input);
    if (!in) throw Error(ErrorCode::Parse, "cannot open '" + o.input + "'");
    CsvTable table;
    try {
        table = read_csv(in);
    } catch (const Error& e) {
        throw Error(e.code(), o.input + ": " + e.what());
    }
    const std::size_t cp = table.column(o.precip_col);
    const auto cd = table.find_column(o.day_col);
    std::vector<double> precip;
    std::vector<long long> days;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto ctx = o.input + ": " + detail::line_context(table.lines[r]);
        precip.push_back(detail::parse_double(table.rows[r][cp], ctx));
        if (cd) days.push_back(detail::parse_integer(table.rows[r][*cd], ctx));
    }
    const auto fit = fit_region_params(o.region, precip, days);

    std::ostringstream doc;
    doc << "# fitted from " << o.input << " (" << precip.size() << " days)\n";
    for (std::size_t m = 0; m < 12; ++m) {
        if (fit.params.rate_defaulted[m]) doc << "# month " << m + 1 << " had no wet days; rate defaulted\n";
    }
    write_regions(doc, {fit.params});
    manifest.parameters = {{"input", o.input},
                           {"precip_col", o.precip_col},
                           {"region", o.region},
                           {"days", precip.size()},
                           {"dry_origin_count", fit.transitions.dry_origin_count},
                           {"wet_origin_count", fit.transitions.wet_origin_count}};
    deliver(o.out, doc.str(), manifest);
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string params;
    std::string region = "Madrense";
    int tau = 37;
    std::optional<double> lambda;
    std::size_t n = 366;
    std::uint64_t seed = 1;
    std::size_t pixels = 1;
    std::size_t years = 1;
    std::size_t support_start = 110;
    std::size_t support_end = 183;
    double sigma_d = 0.0075;
    std::string out;
};

int run_simulate(const SimulateOptions& o, Manifest manifest) {
    const auto regions = o.params.empty() ? builtin_regions() : load_regions(o.params);
    const auto& region = find_region(regions, o.region);
    ImpulseSpec spec;
    spec.n = o.n;
    spec.tau = o.tau;
    spec.support_start = o.support_start;
    spec.support_end = o.support_end;
    spec.sigma_d = o.sigma_d;
    spec.validate();
    const AmountModel amounts = o.lambda ? AmountModel{ScenarioAmount{*o.lambda}} : AmountModel{region.amounts()};

    // Pixel p, year t uses replicate index p * years + t.
    std::vector<SeriesRecord> records;
    for (std::size_t p = 0; p < o.pixels; ++p) {
        for (std::size_t t = 0; t < o.years; ++t) {
            const std::uint64_t seed = replicate_seed(o.seed, p * o.years + t);
            const auto pair = simulate_pair(spec, region.transitions, amounts, seed);
            SeriesRecord rec;
            if (o.pixels > 1) rec.id = "p" + std::to_string(p + 1);
            if (o.years > 1) rec.year = std::to_string(t + 1);
            for (std::size_t d = 0; d < o.n; ++d) rec.days.push_back(static_cast<long long>(d) + 1);
            rec.x = pair.x;
            rec.y = pair.y;
            records.push_back(std::move(rec));
            manifest.seeds.push_back(seed);
        }
    }
    const std::string lambda_text = o.lambda ? format_number(*o.lambda) : "monthly";
    std::ostringstream doc;
    write_series(doc, records,
                 {"seed=" + std::to_string(o.seed) + " tau=" + std::to_string(o.tau) + " lambda=" + lambda_text +
                  " region=" + region.name});
    manifest.parameters = {{"params", o.params.empty() ? "builtin" : o.params},
                           {"region", region.name},
                           {"tau", o.tau},
                           {"lambda", lambda_text},
                           {"n", o.n},
                           {"seed", o.seed},
                           {"pixels", o.pixels},
                           {"years", o.years},
                           {"support_start", o.support_start},
                           {"support_end", o.support_end},
                           {"sigma_d", o.sigma_d}};
    deliver(o.out, doc.str(), manifest);
    return 0;
}

// ------------------------------------------------------------------- bench

struct BenchOptions {
    std::string config;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    bool raw = false;
    std::string format = "csv";
    std::string out;
};

int run_bench(const BenchOptions& o, Manifest manifest) {
    auto bench = load_bench_config(o.config);
    if (o.reps) {
        if (*o.reps < 1) throw Error(ErrorCode::InvalidArgument, "--reps must be >= 1");
        bench.reps = *o.reps;
    }
    if (o.seed) bench.seed = *o.seed;
    const auto format = parse_table_format(o.format);
    std::string params_path;
    if (bench.params_path) {
        params_path = *bench.params_path;
        // Relative parameter paths are resolved against the config's directory.
        if (!params_path.empty() && params_path.front() != '/') {
            const auto slash = o.config.find_last_of('/');
            if (slash != std::string::npos) params_path = o.config.substr(0, slash + 1) + params_path;
        }
    }
    const auto regions = bench.params_path ? load_regions(params_path) : builtin_regions();
    auto cells = expand_cells(bench, regions);

    std::vector<ScenarioResult> results;
    const std::size_t threads = default_parallelism();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        cells[c].keep_raw = o.raw;
        const auto& cell = cells[c];
        std::cerr << "[" << c + 1 << "/" << cells.size() << "] " << cell.region << " tau=" << cell.impulse.tau
                  << " lambda=" << format_number(cell.amount_mean) << " reps=" << cell.reps << " ... " << std::flush;
        results.push_back(run_scenario(cell, threads));
        std::size_t failures = 0;
        for (const auto& e : results.back().estimators) failures += e.failures;
        std::cerr << results.back().seconds << " s";
        if (failures) std::cerr << ", " << failures << " failed fits";
        std::cerr << '\n';
    }

    manifest.parameters = {{"config", o.config},
                           {"params", bench.params_path ? params_path : "builtin"},
                           {"reps", bench.reps},
                           {"n", bench.n},
                           {"taus", bench.taus},
                           {"lambdas", bench.lambdas},
                           {"estimators", bench.estimators},
                           {"cv_folds", bench.cv_folds},
                           {"sigma_d", bench.sigma_d},
                           {"format", o.format}};
    manifest.seeds = {bench.seed};

    const auto mean_sd = emit_table(results, TableKind::MeanSd, format);
    const auto mse = emit_table(results, TableKind::Mse, format);
    if (o.out.empty()) {
        if (format == TableFormat::Markdown) {
            std::cout << "## Mean (sd)\n\n" << mean_sd << "\n## MSE\n\n" << mse;
        } else {
            std::cout << "# mean (sd)\n" << mean_sd << "# mse\n" << mse;
        }
        if (o.raw) std::cout << "# raw\n" << emit_raw(results);
        return 0;
    }
    deliver(o.out, mean_sd, manifest);
    deliver(sibling(o.out, "mse"), mse, manifest);
    if (o.raw) {
        const auto raw_path = sibling(o.out, "raw");
        deliver(format == TableFormat::Csv ? raw_path : raw_path.substr(0, raw_path.find_last_of('.')) + ".csv",
                emit_raw(results), manifest);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time delay estimation between paired daily series"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Manifest manifest;
    manifest.argv.assign(argv, argv + argc);

    EstimateOptions est;
    auto* c_est = app.add_subcommand("estimate", "Estimate the delay of y behind x for each series in a CSV file");
    c_est->add_option("input", est.input, "Series CSV (columns day, x, y; optional id and year)")->required();
    c_est->add_option("--x-col", est.cols.x, "Column holding x")->capture_default_str();
    c_est->add_option("--y-col", est.cols.y, "Column holding y")->capture_default_str();
    c_est->add_option("--day-col", est.cols.day, "Column holding the day index")->capture_default_str();
    c_est->add_option("--id-col", est.id_col, "Column naming the series (pixel)");
    c_est->add_option("--year-col", est.year_col, "Column splitting each id into years");
    c_est->add_option("--estimator", est.estimator, "Estimator name, comma list, or 'all'")->capture_default_str();
    c_est->add_option("--grid-fraction", est.grid_fraction, "Fraction of lags searched")->capture_default_str();
    c_est->add_option("--alpha", est.alpha, "Significance level")->capture_default_str();
    c_est->add_option("--cv-folds", est.cv_folds, "Folds for the CV estimators (0 = leave-one-out)")
        ->capture_default_str();
    c_est->add_option("--summary", est.summary, "Also write per-id medians of significant lags to this path");
    c_est->add_option("--out", est.out, "Output path (default stdout)");

    FitOptions fit;
    auto* c_fit = app.add_subcommand("fit-params", "Fit a region's weather generator to a daily precipitation record");
    c_fit->add_option("input", fit.input, "CSV with a precipitation column")->required();
    c_fit->add_option("--precip-col", fit.precip_col, "Precipitation column")->capture_default_str();
    c_fit->add_option("--day-col", fit.day_col, "Day-of-record column (optional in the file)")->capture_default_str();
    c_fit->add_option("--region", fit.region, "Region name to record")->capture_default_str();
    c_fit->add_option("--out", fit.out, "Output parameter file (default stdout)");

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulate paired series with a known delay");
    c_sim->add_option("--params", sim.params, "Region parameter file (default: built-in regions)");
    c_sim->add_option("--region", sim.region, "Region name")->capture_default_str();
    c_sim->add_option("--tau", sim.tau, "True delay in days")->capture_default_str();
    c_sim->add_option("--lambda", sim.lambda, "Mean rain amount (default: the region's monthly rates)");
    c_sim->add_option("--n", sim.n, "Days per series")->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "Root seed")->capture_default_str();
    c_sim->add_option("--pixels", sim.pixels, "Number of ids")->capture_default_str()->check(CLI::PositiveNumber);
    c_sim->add_option("--years", sim.years, "Series per id")->capture_default_str()->check(CLI::PositiveNumber);
    c_sim->add_option("--support-start", sim.support_start, "First day of the impulse")->capture_default_str();
    c_sim->add_option("--support-end", sim.support_end, "Day after the impulse")->capture_default_str();
    c_sim->add_option("--sigma-d", sim.sigma_d, "Noise sd on y")->capture_default_str();
    c_sim->add_option("--out", sim.out, "Output path (default stdout)");

    BenchOptions bench;
    auto* c_bench = app.add_subcommand("bench", "Run Monte Carlo scenarios and tabulate mean (sd) and MSE");
    c_bench->add_option("config", bench.config, "Scenario config file")->required();
    c_bench->add_option("--reps", bench.reps, "Override the replicate count");
    c_bench->add_option("--seed", bench.seed, "Override the root seed");
    c_bench->add_flag("--raw", bench.raw, "Also emit replicate-level lags");
    c_bench->add_option("--format", bench.format, "Table format")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    c_bench->add_option("--out", bench.out, "Mean (sd) table path; the MSE table goes next to it");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_est->parsed()) {
            manifest.command = "estimate";
            return run_estimate(est, manifest);
        }
        if (c_fit->parsed()) {
            manifest.command = "fit-params";
            return run_fit_params(fit, manifest);
        }
        if (c_sim->parsed()) {
            manifest.command = "simulate";
            return run_simulate(sim, manifest);
        }
        manifest.command = "bench";
        return run_bench(bench, manifest);
    } catch (const std::exception& e) {
        std::cerr << "sparsetde: " << e.what() << '\n';
        return 1;
    }
}
