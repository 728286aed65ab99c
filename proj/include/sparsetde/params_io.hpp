#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/simulate.hpp"
#include "sparsetde/text.hpp"

namespace sparsetde {

/// One region's weather generator: occurrence chain plus monthly amount rates.
struct RegionParams {
    std::string name;
    TransitionMatrix transitions{0.0, 1.0};
    std::array<double, 12> monthly_rates{};
    std::array<bool, 12> rate_defaulted{};  // month had no wet days when fitted
    bool dry_row_defaulted = false;
    bool wet_row_defaulted = false;

    [[nodiscard]] MonthlyAmount amounts() const { return MonthlyAmount{monthly_rates}; }
};


/// Reads an INI-style region file:
///
///   [Madrense]
///   p_dry_wet = 0.22
///   p_wet_wet = 0.46
///   monthly_rates = r1, ..., r12
///   monthly_defaulted = 0, ..., 0     (optional)
///   dry_row_defaulted = false         (optional)
///   wet_row_defaulted = false         (optional)
///
/// '#' and ';' start comments. Sections keep file order.
[[nodiscard]] inline std::vector<RegionParams> parse_regions(std::istream& in) {
    std::vector<RegionParams> out;
    struct Pending {
        std::optional<double> p_dw, p_ww;
        std::optional<std::array<double, 12>> rates;
        std::size_t line = 0;
    };
    std::vector<Pending> pending;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto ctx = detail::line_context(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::Parse, ctx + ": unterminated section header");
            RegionParams r;
            r.name = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (r.name.empty()) throw Error(ErrorCode::Parse, ctx + ": empty region name");
            for (const auto& prev : out) {
                if (prev.name == r.name) throw Error(ErrorCode::Parse, ctx + ": duplicate region '" + r.name + "'");
            }
            out.push_back(std::move(r));
            pending.push_back({});
            pending.back().line = line_no;
            continue;
        }
        if (out.empty()) throw Error(ErrorCode::Parse, ctx + ": key outside any [region] section");
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::Parse, ctx + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        auto& r = out.back();
        auto& p = pending.back();
        if (key == "p_dry_wet") {
            p.p_dw = detail::parse_double(value, ctx);
        } else if (key == "p_wet_wet") {
            p.p_ww = detail::parse_double(value, ctx);
        } else if (key == "monthly_rates" || key == "monthly_defaulted") {
            const auto parts = detail::split(value, ',');
            if (parts.size() != 12) throw Error(ErrorCode::Parse, ctx + ": " + key + " needs 12 values");
            if (key == "monthly_rates") {
                std::array<double, 12> rates{};
                for (std::size_t m = 0; m < 12; ++m) {
                    rates[m] = detail::parse_double(parts[m], ctx);
                    if (!(rates[m] > 0.0)) throw Error(ErrorCode::Parse, ctx + ": monthly rates must be positive");
                }
                p.rates = rates;
            } else {
                for (std::size_t m = 0; m < 12; ++m) r.rate_defaulted[m] = detail::parse_flag(parts[m], ctx);
            }
        } else if (key == "dry_row_defaulted") {
            r.dry_row_defaulted = detail::parse_flag(value, ctx);
        } else if (key == "wet_row_defaulted") {
            r.wet_row_defaulted = detail::parse_flag(value, ctx);
        } else {
            throw Error(ErrorCode::Parse, ctx + ": unknown key '" + key + "'");
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto ctx = "region '" + out[i].name + "' (" + detail::line_context(pending[i].line) + ")";
        if (!pending[i].p_dw || !pending[i].p_ww || !pending[i].rates) {
            throw Error(ErrorCode::Parse, ctx + ": needs p_dry_wet, p_wet_wet and monthly_rates");
        }
        try {
            out[i].transitions = TransitionMatrix(*pending[i].p_dw, *pending[i].p_ww);
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, ctx + ": " + e.what());
        }
        out[i].monthly_rates = *pending[i].rates;
    }
    return out;
}

[[nodiscard]] inline std::vector<RegionParams> parse_regions(const std::string& text) {
    std::istringstream in(text);
    return parse_regions(in);
}

[[nodiscard]] inline std::vector<RegionParams> load_regions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open region file '" + path + "'");
    try {
        return parse_regions(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

inline void write_regions(std::ostream& out, const std::vector<RegionParams>& regions) {
    auto flags = [&](const auto& arr) {
        for (std::size_t m = 0; m < arr.size(); ++m) out << (m ? ", " : "") << (arr[m] ? 1 : 0);
    };
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        if (i) out << '\n';
        out << '[' << r.name << "]\n";
        out << "p_dry_wet = " << format_number(r.transitions.p_dry_wet()) << '\n';
        out << "p_wet_wet = " << format_number(r.transitions.p_wet_wet()) << '\n';
        out << "monthly_rates = ";
        for (std::size_t m = 0; m < 12; ++m) out << (m ? ", " : "") << format_number(r.monthly_rates[m]);
        out << '\n';
        if (std::any_of(r.rate_defaulted.begin(), r.rate_defaulted.end(), [](bool b) { return b; })) {
            out << "monthly_defaulted = ";
            flags(r.rate_defaulted);
            out << '\n';
        }
        if (r.dry_row_defaulted) out << "dry_row_defaulted = true\n";
        if (r.wet_row_defaulted) out << "wet_row_defaulted = true\n";
    }
}

[[nodiscard]] inline const RegionParams& find_region(const std::vector<RegionParams>& regions,
                                                     std::string_view name) {
    for (const auto& r : regions) {
        if (r.name == name) return r;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown region '" + std::string(name) + "'");
}

/// Built-in parameters for the four eco-regions (same values as
/// data/regions.ini).
[[nodiscard]] inline std::vector<RegionParams> builtin_regions() {
    return parse_regions(std::string(R"(
[Madrense]
p_dry_wet = 0.22
p_wet_wet = 0.46
monthly_rates = 0.20, 0.22, 0.30, 0.35, 0.25, 0.10, 0.07, 0.07, 0.09, 0.14, 0.18, 0.18

[Mezquital]
p_dry_wet = 0.25
p_wet_wet = 0.45
monthly_rates = 0.30, 0.32, 0.40, 0.38, 0.22, 0.12, 0.09, 0.09, 0.10, 0.16, 0.25, 0.28

[Interior Plains]
p_dry_wet = 0.30
p_wet_wet = 0.45
monthly_rates = 0.35, 0.38, 0.45, 0.40, 0.25, 0.14, 0.10, 0.10, 0.12, 0.20, 0.30, 0.33

[Plateau Plains]
p_dry_wet = 0.27
p_wet_wet = 0.45
monthly_rates = 0.33, 0.35, 0.42, 0.40, 0.24, 0.13, 0.09, 0.09, 0.11, 0.18, 0.28, 0.30
)"));
}

/// Result of fitting a generator to an observed daily precipitation record.
struct FittedParams {
    RegionParams params;
    TransitionEstimate transitions;
    std::array<std::size_t, 12> wet_days_per_month{};
};

/// Chain from wet/dry occurrences (wet = amount > 0) and one exponential rate
/// per month from that month's wet-day amounts. Days are 1-based positions on
/// the repeating 366-day calendar. A month with no wet days gets the median
/// of the other months' rates (or 1 if no month has rain) and is flagged.
[[nodiscard]] inline FittedParams fit_region_params(std::string name, std::span<const double> precipitation,
                                                    std::span<const long long> days = {}) {
    if (!days.empty() && days.size() != precipitation.size()) {
        throw Error(ErrorCode::DimensionMismatch, "day and precipitation columns differ in length");
    }
    std::vector<std::uint8_t> wet(precipitation.size());
    std::array<std::vector<double>, 12> amounts;
    for (std::size_t i = 0; i < precipitation.size(); ++i) {
        const double a = precipitation[i];
        if (!(a >= 0.0)) throw Error(ErrorCode::NonPositiveAmount, "precipitation must be >= 0");
        wet[i] = a > 0.0 ? 1 : 0;
        if (a > 0.0) {
            const long long day = days.empty() ? static_cast<long long>(i) + 1 : days[i];
            if (day < 1) throw Error(ErrorCode::InvalidArgument, "days must be >= 1");
            amounts[static_cast<std::size_t>(month_of_day(static_cast<std::size_t>(day)) - 1)].push_back(a);
        }
    }
    FittedParams out;
    out.transitions = estimate_transition_matrix(wet);
    out.params.name = std::move(name);
    out.params.transitions = out.transitions.matrix;
    out.params.dry_row_defaulted = out.transitions.dry_row_defaulted;
    out.params.wet_row_defaulted = out.transitions.wet_row_defaulted;

    std::vector<double> fitted;
    for (std::size_t m = 0; m < 12; ++m) {
        out.wet_days_per_month[m] = amounts[m].size();
        if (!amounts[m].empty()) {
            out.params.monthly_rates[m] = fit_exponential_rate(amounts[m]);
            fitted.push_back(out.params.monthly_rates[m]);
        }
    }
    double fallback = 1.0;
    if (!fitted.empty()) {
        std::sort(fitted.begin(), fitted.end());
        const std::size_t h = fitted.size() / 2;
        fallback = fitted.size() % 2 ? fitted[h] : 0.5 * (fitted[h - 1] + fitted[h]);
    }
    for (std::size_t m = 0; m < 12; ++m) {
        if (amounts[m].empty()) {
            out.params.monthly_rates[m] = fallback;
            out.params.rate_defaulted[m] = true;
        }
    }
    return out;
}

}  // namespace sparsetde
