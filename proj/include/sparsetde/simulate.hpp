#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/random.hpp"
#include "sparsetde/signal.hpp"

namespace sparsetde {

/// Two-state (dry = 0, wet = 1) Markov chain for daily rain occurrence.
class TransitionMatrix {
public:
    TransitionMatrix(double p_dry_wet, double p_wet_wet) : p_dry_wet_(p_dry_wet), p_wet_wet_(p_wet_wet) {
        auto valid = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!valid(p_dry_wet) || !valid(p_wet_wet)) {
            throw Error(ErrorCode::InvalidArgument, "transition probabilities must lie in [0, 1]");
        }
    }

    [[nodiscard]] double p_dry_wet() const noexcept { return p_dry_wet_; }
    [[nodiscard]] double p_dry_dry() const noexcept { return 1.0 - p_dry_wet_; }
    [[nodiscard]] double p_wet_wet() const noexcept { return p_wet_wet_; }
    [[nodiscard]] double p_wet_dry() const noexcept { return 1.0 - p_wet_wet_; }

    /// Long-run fraction of wet days; nullopt when both states are absorbing.
    [[nodiscard]] std::optional<double> stationary_wet() const noexcept {
        const double denom = p_dry_wet_ + p_wet_dry();
        if (denom <= 0.0) return std::nullopt;
        return p_dry_wet_ / denom;
    }

    friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

private:
    double p_dry_wet_;
    double p_wet_wet_;
};

struct TransitionEstimate {
    TransitionMatrix matrix{0.0, 0.0};
    bool dry_row_defaulted = false;  // no transition out of a dry day observed
    bool wet_row_defaulted = false;  // no transition out of a wet day observed
    std::size_t dry_origin_count = 0;
    std::size_t wet_origin_count = 0;
};

/// Maximum-likelihood transition frequencies from consecutive pairs. A row
/// with no observed transitions defaults to staying in that state.
[[nodiscard]] inline TransitionEstimate estimate_transition_matrix(std::span<const std::uint8_t> wet) {
    if (wet.size() < 2) throw Error(ErrorCode::TooShort, "need at least two days of occurrences");
    std::size_t dd = 0, dw = 0, wd = 0, ww = 0;
    for (std::size_t t = 1; t < wet.size(); ++t) {
        const bool from = wet[t - 1] != 0;
        const bool to = wet[t] != 0;
        if (!from) (to ? dw : dd)++;
        else (to ? ww : wd)++;
    }
    TransitionEstimate est;
    est.dry_origin_count = dd + dw;
    est.wet_origin_count = wd + ww;
    est.dry_row_defaulted = est.dry_origin_count == 0;
    est.wet_row_defaulted = est.wet_origin_count == 0;
    const double p_dw = est.dry_row_defaulted ? 0.0 : static_cast<double>(dw) / static_cast<double>(dd + dw);
    const double p_ww = est.wet_row_defaulted ? 1.0 : static_cast<double>(ww) / static_cast<double>(wd + ww);
    est.matrix = TransitionMatrix(p_dw, p_ww);
    return est;
}

/// MLE rate of an exponential sample: 1 / mean.
[[nodiscard]] inline double fit_exponential_rate(std::span<const double> amounts) {
    if (amounts.empty()) throw Error(ErrorCode::Empty, "no amounts to fit");
    double sum = 0.0;
    for (double a : amounts) {
        if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveAmount, "amounts must be positive");
        sum += a;
    }
    return static_cast<double>(amounts.size()) / sum;
}

/// Month (1..12) of a 1-based day index on a repeating 366-day calendar.
[[nodiscard]] inline int month_of_day(std::size_t day) noexcept {
    static constexpr std::array<int, 12> lengths{31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    std::size_t doy = (day - 1) % 366;
    for (int m = 0; m < 12; ++m) {
        if (doy < static_cast<std::size_t>(lengths[static_cast<std::size_t>(m)])) return m + 1;
        doy -= static_cast<std::size_t>(lengths[static_cast<std::size_t>(m)]);
    }
    return 12;
}

/// Starts from the stationary distribution unless `initial_wet` is given.
[[nodiscard]] inline std::vector<std::uint8_t> simulate_occurrences(const TransitionMatrix& tm, std::size_t n,
                                                                    Rng& rng,
                                                                    std::optional<bool> initial_wet = {}) {
    std::vector<std::uint8_t> wet(n, 0);
    if (n == 0) return wet;
    // Always consume one draw for the initial state so streams stay aligned.
    const double u0 = rng.uniform();
    bool state = initial_wet.value_or(u0 < tm.stationary_wet().value_or(0.0));
    wet[0] = state ? 1 : 0;
    for (std::size_t t = 1; t < n; ++t) {
        const double p = state ? tm.p_wet_wet() : tm.p_dry_wet();
        state = rng.uniform() < p;
        wet[t] = state ? 1 : 0;
    }
    return wet;
}

[[nodiscard]] inline std::vector<std::uint8_t> simulate_occurrences(const TransitionMatrix& tm, std::size_t n,
                                                                    std::uint64_t seed,
                                                                    std::optional<bool> initial_wet = {}) {
    Rng rng(seed);
    return simulate_occurrences(tm, n, rng, initial_wet);
}

/// Indicator carrier f on days [support_start, support_end) and its copy g
/// delayed by tau days. Days are 1-based.
struct ImpulseSpec {
    std::size_t n = 366;
    std::size_t support_start = 110;
    std::size_t support_end = 183;
    int tau = 37;
    double sigma_d = 0.0075;

    void validate() const {
        if (n < 2) throw Error(ErrorCode::InvalidArgument, "series length must be >= 2");
        if (!(support_start >= 1 && support_start < support_end && support_end <= n)) {
            throw Error(ErrorCode::InvalidArgument, "impulse support must satisfy 1 <= start < end <= n");
        }
        if (!(sigma_d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_d must be >= 0");
    }
};

struct ImpulsePair {
    std::vector<double> f;
    std::vector<double> g;
};

/// g(t) = f(t - tau), zero where t - tau falls outside [1, n].
[[nodiscard]] inline ImpulsePair impulse(const ImpulseSpec& spec) {
    spec.validate();
    ImpulsePair out{std::vector<double>(spec.n, 0.0), std::vector<double>(spec.n, 0.0)};
    bool any = false;
    for (std::size_t t = 1; t <= spec.n; ++t) {
        if (t >= spec.support_start && t < spec.support_end) out.f[t - 1] = 1.0;
        const long long src = static_cast<long long>(t) - spec.tau;
        if (src >= static_cast<long long>(spec.support_start) && src < static_cast<long long>(spec.support_end)) {
            out.g[t - 1] = 1.0;
            any = true;
        }
    }
    if (!any) throw Error(ErrorCode::EmptySupport, "the delayed impulse leaves the series entirely");
    return out;
}

/// Rain amount law: one scenario-wide mean, or twelve monthly exponential rates.
struct ScenarioAmount {
    double mean = 0.125;
};
struct MonthlyAmount {
    std::array<double, 12> rates{};
};
using AmountModel = std::variant<ScenarioAmount, MonthlyAmount>;

[[nodiscard]] inline double amount_mean(const AmountModel& model, std::size_t day) {
    if (const auto* s = std::get_if<ScenarioAmount>(&model)) return s->mean;
    const auto& rates = std::get<MonthlyAmount>(model).rates;
    return 1.0 / rates[static_cast<std::size_t>(month_of_day(day) - 1)];
}

struct SimulatedPair {
    std::vector<double> x;  // rain superimposed on f, plus amounts
    std::vector<double> y;  // g plus Gaussian noise
    std::vector<std::uint8_t> wet;
    std::vector<double> increments;  // amount added at each nonzero point of x
    int true_tau = 0;
    std::uint64_t seed = 0;
};

/// Draws one precipitation/vegetation pair with known delay:
///   1. occurrences from the chain;
///   2. f is set to 1 on every wet day;
///   3. an exponential amount is added wherever the superimposed f is nonzero;
///   4. y = g + N(0, sigma_d^2).
/// Random numbers are consumed in a fixed layout (n + 1 occurrence draws,
/// n unit exponentials, n normals) so pairs with different amount laws share
/// occurrences and noise under one seed.
[[nodiscard]] inline SimulatedPair simulate_pair(const ImpulseSpec& spec, const TransitionMatrix& tm,
                                                 const AmountModel& amounts, std::uint64_t seed) {
    if (const auto* s = std::get_if<ScenarioAmount>(&amounts); s && !(s->mean >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "amount mean must be >= 0");
    }
    if (const auto* m = std::get_if<MonthlyAmount>(&amounts)) {
        for (double r : m->rates) {
            if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "monthly rates must be positive");
        }
    }
    const auto [f, g] = impulse(spec);
    Rng rng(seed);

    SimulatedPair out;
    out.true_tau = spec.tau;
    out.seed = seed;
    out.wet = simulate_occurrences(tm, spec.n, rng);
    out.x.assign(spec.n, 0.0);
    out.increments.assign(spec.n, 0.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double unit = rng.exponential(1.0);
        const double carrier = out.wet[i] ? 1.0 : f[i];
        if (carrier != 0.0) {
            out.increments[i] = unit * amount_mean(amounts, i + 1);
            out.x[i] = carrier + out.increments[i];
        }
    }
    out.y.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) out.y[i] = g[i] + spec.sigma_d * rng.normal();
    return out;
}

[[nodiscard]] inline SimulatedPair simulate_pair(const ImpulseSpec& spec, const TransitionMatrix& tm,
                                                 double mean_amount, std::uint64_t seed) {
    return simulate_pair(spec, tm, AmountModel{ScenarioAmount{mean_amount}}, seed);
}

}  // namespace sparsetde
