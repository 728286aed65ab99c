#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/lag_grid.hpp"
#include "sparsetde/shift_matrix.hpp"
#include "sparsetde/signal.hpp"

namespace sparsetde {

/// How each sample is transformed before the lagged product mean.
///   Unscaled: raw samples.
///   Standard: centered and scaled by the moments of the whole series.
///   Trimmed:  centered and scaled by the moments of the overlapping segment
///             at each lag, on both series.
enum class ScalingMode { Unscaled, Standard, Trimmed };

constexpr std::string_view to_string(ScalingMode mode) noexcept {
    switch (mode) {
        case ScalingMode::Unscaled: return "unscaled";
        case ScalingMode::Standard: return "standard";
        case ScalingMode::Trimmed: return "trimmed";
    }
    return "unknown";
}

struct AssociationProfile {
    LagGrid grid;
    std::vector<double> gamma;
    ScalingMode scaling;

    [[nodiscard]] double at(int lag) const {
        const auto lags = grid.lags();
        const auto it = std::lower_bound(lags.begin(), lags.end(), lag);
        if (it == lags.end() || *it != lag) {
            throw Error(ErrorCode::LagOutOfRange, "lag " + std::to_string(lag) + " not in grid");
        }
        return gamma[static_cast<std::size_t>(it - lags.begin())];
    }
};

namespace detail {

/// Segment of x and y paired at `lag`: x[x_begin + k] with y[y_begin + k].
struct Overlap {
    std::size_t x_begin;
    std::size_t y_begin;
    std::size_t length;
};

inline Overlap overlap_at(std::size_t n, int lag) {
    const int limit = static_cast<int>(n) - 1;
    if (lag < -limit || lag > limit) {
        throw Error(ErrorCode::LagOutOfRange,
                    "lag " + std::to_string(lag) + " outside +/-" + std::to_string(limit));
    }
    const auto shift = static_cast<std::size_t>(std::abs(lag));
    if (lag >= 0) return {0, shift, n - shift};
    return {shift, 0, n - shift};
}

inline void require_same_length(const Signal& x, const Signal& y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, "x and y must have the same length");
    }
}

inline Moments nonconstant_moments(std::span<const double> v, std::string_view what) {
    const Moments m = population_moments(v);
    if (!(m.sd > 0.0)) throw Error(ErrorCode::ZeroVariance, std::string(what) + " is constant");
    return m;
}

}  // namespace detail

/// Lagged product-moment association gamma_l. For l >= 0 pairs x[k] with
/// y[k + l]; for l < 0 pairs x[k + |l|] with y[k]; averages over the n - |l|
/// overlapping pairs.
[[nodiscard]] inline double association_at_lag(const Signal& x, const Signal& y, int lag,
                                               ScalingMode scaling) {
    detail::require_same_length(x, y);
    const auto [xb, yb, m] = detail::overlap_at(x.size(), lag);
    const auto xs = x.values().subspan(xb, m);
    const auto ys = y.values().subspan(yb, m);

    Moments mx{0.0, 1.0};
    Moments my{0.0, 1.0};
    if (scaling == ScalingMode::Standard) {
        mx = detail::nonconstant_moments(x.values(), "x");
        my = detail::nonconstant_moments(y.values(), "y");
    } else if (scaling == ScalingMode::Trimmed) {
        mx = detail::nonconstant_moments(xs, "overlap segment of x");
        my = detail::nonconstant_moments(ys, "overlap segment of y");
    }

    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        acc += ((xs[k] - mx.mean) / mx.sd) * ((ys[k] - my.mean) / my.sd);
    }
    return acc / static_cast<double>(m);
}

/// Association over a whole grid, computed through S^T x on the shift matrix
/// of y. Trimmed scaling adds per-lag segment moments on top of the product.
[[nodiscard]] inline AssociationProfile association_profile(const Signal& x, const Signal& y,
                                                            const LagGrid& grid,
                                                            ScalingMode scaling) {
    detail::require_same_length(x, y);
    const std::size_t n = x.size();
    if (grid.sample_size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "grid was built for a different sample size");
    }

    std::vector<double> gamma(grid.size());

    if (scaling == ScalingMode::Unscaled) {
        const ShiftMatrix shifts(y);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const int lag = grid[i];
            gamma[i] = shifts.dot(shifts.column_of_lag(lag), x.values()) /
                       static_cast<double>(n - static_cast<std::size_t>(std::abs(lag)));
        }
        return {grid, std::move(gamma), scaling};
    }

    // Both remaining modes are invariant under a global positive affine map,
    // so work on globally standardized copies.
    if (!(population_moments(x.values()).sd > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "x is constant");
    }
    if (!(population_moments(y.values()).sd > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "y is constant");
    }
    const Signal xs = standardize(x);
    const Signal ys = standardize(y);
    const ShiftMatrix shifts(ys);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int lag = grid[i];
        const double cross = shifts.dot(shifts.column_of_lag(lag), xs.values());
        if (scaling == ScalingMode::Standard) {
            gamma[i] = cross / static_cast<double>(n - static_cast<std::size_t>(std::abs(lag)));
            continue;
        }
        const auto [xb, yb, m] = detail::overlap_at(n, lag);
        const Moments mx = detail::nonconstant_moments(xs.values().subspan(xb, m),
                                                       "overlap segment of x");
        const Moments my = detail::nonconstant_moments(ys.values().subspan(yb, m),
                                                       "overlap segment of y");
        gamma[i] = (cross / static_cast<double>(m) - mx.mean * my.mean) / (mx.sd * my.sd);
    }
    return {grid, std::move(gamma), scaling};
}

}  // namespace sparsetde
