#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sparsetde/lag_grid.hpp"
#include "sparsetde/pvalue.hpp"
#include "sparsetde/simulate.hpp"
#include "sparsetde/tde.hpp"

using namespace sparsetde;

namespace {

// Two-sided p-value from Boost's t distribution.
double boost_pvalue(double r, std::size_t m) {
    const double df = static_cast<double>(m) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

std::vector<double> spike(std::size_t n, std::size_t at) {
    std::vector<double> v(n, 0.0);
    v[at - 1] = 1.0;
    return v;
}

}  // namespace

TEST(PValue, NullAndPerfect) {
    EXPECT_NEAR(no_correlation_pvalue(0.0, 100), 1.0, 1e-12);
    EXPECT_EQ(no_correlation_pvalue(1.0, 10), 0.0);
    EXPECT_EQ(no_correlation_pvalue(-1.0, 10), 0.0);
}

TEST(PValue, MatchesStudentT) {
    EXPECT_NEAR(no_correlation_pvalue(0.5, 30), boost_pvalue(0.5, 30), 1e-10);
    EXPECT_NEAR(no_correlation_pvalue(0.5, 30), 0.0049, 1e-6);
    for (double r : {-0.9, -0.3, 0.01, 0.2, 0.7, 0.95}) {
        for (std::size_t m : {3u, 4u, 10u, 57u, 365u}) {
            EXPECT_NEAR(no_correlation_pvalue(r, m), boost_pvalue(r, m), 1e-9) << r << ' ' << m;
        }
    }
}

TEST(PValue, IncompleteBetaMatchesBoost) {
    for (double a : {0.5, 1.0, 3.5, 40.0}) {
        for (double b : {0.5, 2.0, 7.0}) {
            for (double x : {0.01, 0.3, 0.5, 0.8, 0.99}) {
                EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12);
            }
        }
    }
}

TEST(PValue, MonotoneInAbsoluteR) {
    double prev = 2.0;
    for (int i = 0; i < 100; ++i) {
        const double r = i / 100.0;
        const double p = no_correlation_pvalue(r, 50);
        EXPECT_LE(p, prev);
        EXPECT_EQ(p, no_correlation_pvalue(-r, 50));
        prev = p;
    }
}

TEST(PValue, ShortOverlap) {
    EXPECT_THROW((void)no_correlation_pvalue(0.5, 2), Error);
}

TEST(Estimators, NamesAndValidation) {
    ASSERT_EQ(all_estimators().size(), 7u);
    for (auto name : kEstimatorNames) EXPECT_EQ(named_estimator(name).name, name);
    EXPECT_THROW((void)named_estimator("pearson"), Error);
    EXPECT_EQ(display_name("lasso-cv-cor"), "L^cor_CV");
    EXPECT_EQ(display_name("pn-trim"), "Pn_trim");

    EstimatorSpec bad = named_estimator("pn");
    bad.lambda_rule = QuantileOfPath{};
    EXPECT_THROW(bad.validate(), Error);
    EstimatorSpec bad_lasso = named_estimator("lasso-cv");
    bad_lasso.lambda_rule.reset();
    EXPECT_THROW(bad_lasso.validate(), Error);
    EXPECT_EQ(std::get<CrossValidation>(*named_estimator("lasso-cv", 5).lambda_rule).folds, 5u);
}

TEST(EstimateDelay, NoiselessImpulseAllEstimators) {
    ImpulseSpec spec;
    const auto [f, g] = impulse(spec);
    const auto grid = restrict_grid(366, 0.4);
    DelayEstimator est{Signal(f), Signal(g)};
    for (const auto& s : all_estimators()) {
        const auto r = est.estimate(grid, s);
        EXPECT_EQ(r.lag_hat, 37) << s.name;
        EXPECT_LT(r.p_value, 0.05) << s.name;
        EXPECT_EQ(r.overlap_length, 329u);
        EXPECT_EQ(r.lambda.has_value(), s.family == Family::Lasso);
    }
}

TEST(EstimateDelay, SelfIsZeroLag) {
    std::mt19937_64 gen(30);
    const Signal x(oracle::random_vector(60, gen));
    const auto grid = restrict_grid(60, 0.5);
    for (auto name : {"pn", "pn-trim", "pn-standard"}) {
        EXPECT_EQ(estimate_delay(x, x, grid, named_estimator(name)).lag_hat, 0) << name;
    }
}

TEST(EstimateDelay, SpikesFiftyApart) {
    const Signal x(spike(366, 100));
    const Signal y(spike(366, 150));
    // Brute force: the only nonzero product is at lag 50.
    int nonzero = 0, at = 0;
    for (int l = -365; l <= 365; ++l) {
        if (oracle::association({x.begin(), x.end()}, {y.begin(), y.end()}, l, oracle::Scale::None) != 0.0) {
            ++nonzero;
            at = l;
        }
    }
    ASSERT_EQ(nonzero, 1);
    EXPECT_EQ(estimate_delay(x, y, LagGrid::full(366), named_estimator("pn")).lag_hat, at);
}

TEST(EstimateDelay, ResultMatchesNaiveArgmax) {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 10; ++rep) {
        const auto xv = oracle::random_vector(80, gen);
        const auto yv = oracle::random_vector(80, gen);
        const auto grid = restrict_grid(80, 0.4);
        for (auto [name, scale] : {std::pair{"pn", oracle::Scale::None}, std::pair{"pn-trim", oracle::Scale::Segment},
                                   std::pair{"pn-standard", oracle::Scale::Global}}) {
            int best = 0;
            double best_v = -1.0;
            for (int l : grid.lags()) {
                const double v = oracle::association(xv, yv, l, scale);
                if (v * v > best_v) best_v = v * v, best = l;
            }
            const auto r = estimate_delay(Signal(xv), Signal(yv), grid, named_estimator(name));
            EXPECT_EQ(r.lag_hat, best) << name;
            EXPECT_NEAR(r.gamma_at_lag * r.gamma_at_lag, best_v, 1e-12);
            // p-value of the overlap-segment correlation at the chosen lag.
            EXPECT_NEAR(r.p_value, boost_pvalue(oracle::association(xv, yv, best, oracle::Scale::Segment), 80 - std::abs(best)),
                        1e-9);
        }
    }
}

TEST(EstimateDelay, ConstantInputFails) {
    const Signal c(std::vector<double>(50, 2.0));
    std::mt19937_64 gen(32);
    const Signal y(oracle::random_vector(50, gen));
    const auto grid = restrict_grid(50, 0.4);
    for (const auto& s : all_estimators()) {
        try {
            (void)estimate_delay(c, y, grid, s);
            FAIL() << s.name;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ZeroVariance);
        }
    }
}

TEST(EstimateDelay, GridSizeMismatch) {
    const Signal x({1, 2, 3, 4});
    EXPECT_THROW((void)estimate_delay(x, x, restrict_grid(5, 0.5), named_estimator("pn")), Error);
}

TEST(ArgmaxSquared, TiesPreferSmallAbsoluteLagThenNegative) {
    AssociationProfile p{LagGrid(10, {-2, -1, 1, 2}), {0.5, -0.5, 0.5, 0.1}, ScalingMode::Unscaled};
    EXPECT_EQ(p.grid[argmax_squared(p)], -1);
    p.gamma = {0.5, 0.1, 0.1, -0.5};
    EXPECT_EQ(p.grid[argmax_squared(p)], -2);
}

TEST(Aggregate, MedianAndRobustSd) {
    auto results_from = [](std::vector<int> lags, double p) {
        std::vector<TdeResult> out;
        for (int l : lags) {
            TdeResult r;
            r.lag_hat = l;
            r.p_value = p;
            out.push_back(r);
        }
        return out;
    };
    const auto same = aggregate_years(results_from({28, 28, 28}, 0.01), 0.05);
    EXPECT_EQ(*same.median_lag, 28);
    EXPECT_EQ(*same.robust_sd, 0);

    const auto spread = aggregate_years(results_from({10, 20, 30, 40, 50}, 0.01), 0.05);
    EXPECT_EQ(*spread.median_lag, 30);
    // Hand MAD: |deviations| = 20, 10, 0, 10, 20 -> median 10.
    EXPECT_NEAR(*spread.robust_sd, 14.826, 1e-12);
    EXPECT_EQ(spread.significant_count, 5u);

    const auto none = aggregate_years(results_from({3, 4}, 0.2), 0.05);
    EXPECT_FALSE(none.significant());
    EXPECT_FALSE(none.robust_sd.has_value());
    EXPECT_EQ(none.significant_fraction, 0.0);

    auto mixed = results_from({10, 12, 90}, 0.01);
    mixed[2].p_value = 0.5;
    const auto m = aggregate_years(mixed, 0.05);
    EXPECT_EQ(*m.median_lag, 11);
    EXPECT_NEAR(m.significant_fraction, 2.0 / 3.0, 1e-15);

    EXPECT_THROW((void)aggregate_years({}, 0.05), Error);
    EXPECT_THROW((void)aggregate_years(results_from({1}, 0.01), 0.0), Error);
}

TEST(Aggregate, RobustSdMatchesOracle) {
    std::mt19937_64 gen(33);
    const auto v = oracle::random_vector(41, gen);
    const double med = oracle::median(v);
    std::vector<double> dev;
    for (double a : v) dev.push_back(std::abs(a - med));
    EXPECT_NEAR(robust_sd(v), 1.4826 * oracle::median(dev), 1e-14);
}
