#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "sparsetde/error.hpp"

namespace sparsetde {

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double incomplete_beta_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
[[nodiscard]] inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, "x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::incomplete_beta_fraction(a, b, x) / a;
    return 1.0 - front * detail::incomplete_beta_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of the t-test for zero correlation, with m - 2 degrees of
/// freedom where m is the number of overlapping samples behind r.
[[nodiscard]] inline double no_correlation_pvalue(double r, std::size_t overlap_length) {
    if (overlap_length < 3) {
        throw Error(ErrorCode::InsufficientOverlap, "need at least 3 overlapping samples for a p-value");
    }
    if (std::isnan(r)) throw Error(ErrorCode::InvalidArgument, "correlation is NaN");
    r = std::clamp(r, -1.0, 1.0);
    if (std::abs(r) == 1.0) return 0.0;
    const double df = static_cast<double>(overlap_length) - 2.0;
    const double t2 = r * r * df / (1.0 - r * r);
    // P(|T| > |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    return std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t2)), 0.0, 1.0);
}

}  // namespace sparsetde
