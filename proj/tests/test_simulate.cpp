#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sparsetde/params_io.hpp"
#include "sparsetde/random.hpp"
#include "sparsetde/simulate.hpp"

using namespace sparsetde;

namespace {

std::vector<std::uint8_t> occ(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

// Transition counts by hand: returns {dd, dw, wd, ww}.
std::array<double, 4> count_pairs(const std::vector<std::uint8_t>& w) {
    std::array<double, 4> c{};
    for (std::size_t t = 1; t < w.size(); ++t) c[static_cast<std::size_t>(2 * w[t - 1] + w[t])] += 1.0;
    return c;
}

}  // namespace

TEST(TransitionMatrix, HandCounts) {
    const auto est = estimate_transition_matrix(occ({0, 0, 1, 1, 0}));
    EXPECT_EQ(est.matrix.p_dry_wet(), 0.5);
    EXPECT_EQ(est.matrix.p_dry_dry(), 0.5);
    EXPECT_EQ(est.matrix.p_wet_wet(), 0.5);
    EXPECT_EQ(est.matrix.p_wet_dry(), 0.5);

    const auto alt = estimate_transition_matrix(occ({0, 1, 0, 1, 0}));
    EXPECT_EQ(alt.matrix.p_dry_wet(), 1.0);
    EXPECT_EQ(alt.matrix.p_wet_dry(), 1.0);
}

TEST(TransitionMatrix, AllDryDefaultsWetRow) {
    const auto est = estimate_transition_matrix(occ({0, 0, 0, 0}));
    EXPECT_EQ(est.matrix.p_dry_dry(), 1.0);
    EXPECT_TRUE(est.wet_row_defaulted);
    EXPECT_FALSE(est.dry_row_defaulted);
    EXPECT_EQ(est.matrix.p_wet_wet(), 1.0);
}

TEST(TransitionMatrix, Errors) {
    EXPECT_THROW((void)estimate_transition_matrix(occ({1})), Error);
    EXPECT_THROW(TransitionMatrix(-0.1, 0.5), Error);
    EXPECT_THROW(TransitionMatrix(0.5, 1.1), Error);
}

TEST(ExponentialRate, Examples) {
    EXPECT_EQ(fit_exponential_rate(std::vector<double>{2, 2, 2}), 0.5);
    EXPECT_EQ(fit_exponential_rate(std::vector<double>{1}), 1.0);
    EXPECT_THROW((void)fit_exponential_rate(std::vector<double>{}), Error);
    EXPECT_THROW((void)fit_exponential_rate(std::vector<double>{1, 0}), Error);
}

TEST(ExponentialRate, RoundTrip) {
    Rng rng(99);
    std::vector<double> draws(10'000);
    for (double& d : draws) d = rng.exponential(1.0 / 0.4);
    const double rate = fit_exponential_rate(draws);
    EXPECT_GE(rate, 0.38);
    EXPECT_LE(rate, 0.42);
}

TEST(Rng, Deterministic) {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
    EXPECT_NE(replicate_seed(1, 0), replicate_seed(1, 1));
    EXPECT_NE(replicate_seed(1, 0), replicate_seed(2, 0));
}

TEST(Rng, MomentsOfVariates) {
    Rng rng(6);
    const int n = 200'000;
    double su = 0, se = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        su += rng.uniform();
        se += rng.exponential(2.0);
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(se / n, 2.0, 0.02);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.01);
}

TEST(Occurrences, AbsorbingStates) {
    const auto dry = simulate_occurrences(TransitionMatrix(0.0, 0.5), 50, 1, false);
    for (auto v : dry) EXPECT_EQ(v, 0);
    const auto wet = simulate_occurrences(TransitionMatrix(0.3, 1.0), 50, 1, true);
    for (auto v : wet) EXPECT_EQ(v, 1);
}

TEST(Occurrences, FrequenciesConverge) {
    const TransitionMatrix tm(0.22, 0.46);
    const auto w = simulate_occurrences(tm, 100'000, 77);
    const auto c = count_pairs(w);
    EXPECT_NEAR(c[1] / (c[0] + c[1]), 0.22, 0.01);
    EXPECT_NEAR(c[3] / (c[2] + c[3]), 0.46, 0.01);
    const auto est = estimate_transition_matrix(w);
    EXPECT_DOUBLE_EQ(est.matrix.p_dry_wet(), c[1] / (c[0] + c[1]));
}

TEST(Impulse, SupportAndShift) {
    ImpulseSpec spec;
    spec.tau = 0;
    const auto same = impulse(spec);
    EXPECT_EQ(same.f, same.g);

    spec.tau = 37;
    const auto p = impulse(spec);
    for (std::size_t t = 1; t <= 366; ++t) {
        EXPECT_EQ(p.f[t - 1], (t >= 110 && t < 183) ? 1.0 : 0.0);
        EXPECT_EQ(p.g[t - 1], (t >= 147 && t < 220) ? 1.0 : 0.0) << t;
    }

    spec.tau = 300;
    try {
        (void)impulse(spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySupport);
    }

    spec.tau = 183;
    const auto late = impulse(spec);
    double sum = 0;
    for (double v : late.g) sum += v;
    EXPECT_EQ(sum, 73.0);  // days 293..365
}

TEST(SimulatePair, Structure) {
    ImpulseSpec spec;
    const TransitionMatrix tm(0.25, 0.45);
    const auto a = simulate_pair(spec, tm, 0.5, 1234);
    const auto b = simulate_pair(spec, tm, 0.5, 1234);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    const auto [f, g] = impulse(spec);
    for (std::size_t i = 0; i < 366; ++i) {
        const double carrier = a.wet[i] ? 1.0 : f[i];
        if (carrier == 0.0) {
            EXPECT_EQ(a.x[i], 0.0);
        } else {
            EXPECT_GT(a.increments[i], 0.0);
            EXPECT_DOUBLE_EQ(a.x[i], 1.0 + a.increments[i]);
        }
    }
}

TEST(SimulatePair, ZeroAmountsGiveCarrierAndExactRecoveryInput) {
    ImpulseSpec spec;
    spec.sigma_d = 0.0;
    const auto p = simulate_pair(spec, TransitionMatrix(0.0, 0.0), 0.0, 3);
    const auto [f, g] = impulse(spec);
    // The chain may start wet on day 1 only if the stationary law says so; here it cannot.
    EXPECT_EQ(p.x, f);
    EXPECT_EQ(p.y, g);
}

TEST(SimulatePair, LargerMeanMeansLargerVariance) {
    ImpulseSpec spec;
    const TransitionMatrix tm(0.22, 0.46);
    auto var = [](const std::vector<double>& v) {
        double m = 0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        double s = 0;
        for (double a : v) s += (a - m) * (a - m);
        return s / static_cast<double>(v.size() - 1);
    };
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto lo = simulate_pair(spec, tm, 0.125, seed);
        const auto hi = simulate_pair(spec, tm, 2.5, seed);
        EXPECT_EQ(lo.wet, hi.wet);
        EXPECT_GT(var(hi.x), var(lo.x));
    }
}

TEST(Months, LeapYearCalendar) {
    EXPECT_EQ(month_of_day(1), 1);
    EXPECT_EQ(month_of_day(31), 1);
    EXPECT_EQ(month_of_day(32), 2);
    EXPECT_EQ(month_of_day(60), 2);
    EXPECT_EQ(month_of_day(61), 3);
    EXPECT_EQ(month_of_day(366), 12);
    EXPECT_EQ(month_of_day(367), 1);
}

TEST(FitRegion, SimulateThenFit) {
    const TransitionMatrix tm(0.3, 0.55);
    std::array<double, 12> rates{0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.45, 0.4, 0.35, 0.3, 0.25};
    Rng rng(2024);
    const std::size_t n = 366 * 30;
    const auto wet = simulate_occurrences(tm, n, rng);
    std::vector<double> precip(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (wet[i]) precip[i] = rng.exponential(1.0 / rates[static_cast<std::size_t>(month_of_day(i + 1) - 1)]);
    }
    const auto fit = fit_region_params("test", precip);
    EXPECT_NEAR(fit.params.transitions.p_dry_wet(), 0.3, 0.02);
    EXPECT_NEAR(fit.params.transitions.p_wet_wet(), 0.55, 0.02);
    for (std::size_t m = 0; m < 12; ++m) {
        // 3 asymptotic standard errors: rate / sqrt(count).
        const double se = rates[m] / std::sqrt(static_cast<double>(fit.wet_days_per_month[m]));
        EXPECT_NEAR(fit.params.monthly_rates[m], rates[m], 3.0 * se) << m;
        EXPECT_FALSE(fit.params.rate_defaulted[m]);
    }
}

TEST(FitRegion, AllDryFlagsEverything) {
    const std::vector<double> precip(400, 0.0);
    const auto fit = fit_region_params("dry", precip);
    EXPECT_EQ(fit.params.transitions.p_dry_dry(), 1.0);
    EXPECT_TRUE(fit.params.wet_row_defaulted);
    for (std::size_t m = 0; m < 12; ++m) EXPECT_TRUE(fit.params.rate_defaulted[m]);
}

TEST(FitRegion, MissingMonthGetsMedianOfOthers) {
    std::vector<double> precip(366, 0.0);
    std::vector<long long> days(366);
    for (std::size_t i = 0; i < 366; ++i) days[i] = static_cast<long long>(i) + 1;
    precip[0] = 2.0;   // January: rate 0.5
    precip[40] = 4.0;  // February: rate 0.25
    precip[70] = 1.0;  // March: rate 1
    const auto fit = fit_region_params("sparse", precip, days);
    EXPECT_EQ(fit.params.monthly_rates[0], 0.5);
    EXPECT_EQ(fit.params.monthly_rates[3], 0.5);  // median of {0.25, 0.5, 1}
    EXPECT_TRUE(fit.params.rate_defaulted[3]);
    EXPECT_FALSE(fit.params.rate_defaulted[1]);
}

TEST(FitRegion, TwoDaysAndErrors) {
    const auto fit = fit_region_params("short", std::vector<double>{0.0, 1.0});
    EXPECT_TRUE(fit.params.wet_row_defaulted);
    EXPECT_EQ(fit.params.transitions.p_dry_wet(), 1.0);
    EXPECT_THROW((void)fit_region_params("one", std::vector<double>{1.0}), Error);
    EXPECT_THROW((void)fit_region_params("neg", std::vector<double>{1.0, -1.0}), Error);
}
