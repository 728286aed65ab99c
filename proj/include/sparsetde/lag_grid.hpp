#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsetde/error.hpp"

namespace sparsetde {

/// A strictly increasing set of integer lags, each within [-(n-1), n-1].
class LagGrid {
public:
    LagGrid(std::size_t n, std::vector<int> lags) : n_(n), lags_(std::move(lags)) {
        if (n_ < 1) throw Error(ErrorCode::InvalidArgument, "grid sample size must be positive");
        if (lags_.empty()) throw Error(ErrorCode::DegenerateGrid, "empty lag grid");
        const int limit = static_cast<int>(n_) - 1;
        for (std::size_t i = 0; i < lags_.size(); ++i) {
            if (lags_[i] < -limit || lags_[i] > limit) {
                throw Error(ErrorCode::LagOutOfRange,
                            "lag " + std::to_string(lags_[i]) + " outside +/-" +
                                std::to_string(limit));
            }
            if (i > 0 && lags_[i] <= lags_[i - 1]) {
                throw Error(ErrorCode::InvalidArgument, "lags must be strictly increasing");
            }
        }
    }

    /// {-max_lag, ..., max_lag}
    static LagGrid symmetric(std::size_t n, int max_lag) {
        std::vector<int> lags;
        lags.reserve(2 * static_cast<std::size_t>(max_lag) + 1);
        for (int l = -max_lag; l <= max_lag; ++l) lags.push_back(l);
        return LagGrid(n, std::move(lags));
    }

    /// All 2n-1 lags.
    static LagGrid full(std::size_t n) { return symmetric(n, static_cast<int>(n) - 1); }

    [[nodiscard]] std::size_t sample_size() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return lags_.size(); }
    [[nodiscard]] std::span<const int> lags() const noexcept { return lags_; }
    [[nodiscard]] int operator[](std::size_t i) const noexcept { return lags_[i]; }
    [[nodiscard]] bool contains(int lag) const noexcept {
        return std::binary_search(lags_.begin(), lags_.end(), lag);
    }

private:
    std::size_t n_;
    std::vector<int> lags_;
};

/// Half-width of the symmetric grid that keeps `fraction` of the 2n-1 lags.
/// Rounds fraction*(2n-1)/2 to the nearest integer and clamps to n-1.
[[nodiscard]] inline int restricted_half_width(std::size_t n, double fraction) {
    const double total = static_cast<double>(2 * n - 1);
    if (!(fraction > 0.0 && fraction <= 1.0) || fraction * total < 1.0) {
        throw Error(ErrorCode::DegenerateGrid,
                    "grid fraction " + std::to_string(fraction) + " keeps no lag for n = " +
                        std::to_string(n));
    }
    const int half = static_cast<int>(std::floor(fraction * total / 2.0 + 0.5));
    return std::min(half, static_cast<int>(n) - 1);
}

[[nodiscard]] inline LagGrid restrict_grid(std::size_t n, double fraction) {
    return LagGrid::symmetric(n, restricted_half_width(n, fraction));
}

}  // namespace sparsetde
