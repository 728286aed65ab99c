#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/signal.hpp"

namespace sparsetde {

/// Implicit n x (2n-1) matrix whose columns are zero-padded shifted copies of y.
///
/// Column j corresponds to the lag d = j - (n-1) and holds y[r + d] at row r
/// whenever 0 <= r + d < n, zero elsewhere. Column 0 is (0, ..., 0, y[0]),
/// column n-1 is y itself and column 2n-2 is (y[n-1], 0, ..., 0). With this
/// layout (S^T x)[j] equals the overlap sum of x[k] * y[k + d], so the
/// transpose product of a standardized x gives J_n times the unscaled
/// association profile.
class ShiftMatrix {
public:
    struct RowRange {
        std::size_t begin;
        std::size_t end;
    };

    explicit ShiftMatrix(const Signal& y) : y_(y.begin(), y.end()) {
        const std::size_t n = y_.size();
        prefix_sq_.assign(n + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) prefix_sq_[k + 1] = prefix_sq_[k] + y_[k] * y_[k];
    }

    [[nodiscard]] std::size_t rows() const noexcept { return y_.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return 2 * y_.size() - 1; }
    [[nodiscard]] std::span<const double> source() const noexcept { return y_; }

    [[nodiscard]] int lag_of_column(std::size_t j) const noexcept {
        return static_cast<int>(j) - static_cast<int>(y_.size()) + 1;
    }
    [[nodiscard]] std::size_t column_of_lag(int lag) const noexcept {
        return static_cast<std::size_t>(lag + static_cast<int>(y_.size()) - 1);
    }

    /// Rows holding structural nonzeros of column j.
    [[nodiscard]] RowRange row_range(std::size_t j) const noexcept {
        const int n = static_cast<int>(y_.size());
        const int d = lag_of_column(j);
        return {static_cast<std::size_t>(std::max(0, -d)),
                static_cast<std::size_t>(std::min(n, n - d))};
    }

    [[nodiscard]] double entry(std::size_t r, std::size_t j) const noexcept {
        const auto [b, e] = row_range(j);
        if (r < b || r >= e) return 0.0;
        return y_[static_cast<std::size_t>(static_cast<int>(r) + lag_of_column(j))];
    }

    /// Dense copy of column j.
    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows(), 0.0);
        const auto [b, e] = row_range(j);
        const double* src = window(j, b);
        std::copy(src, src + (e - b), c.begin() + static_cast<std::ptrdiff_t>(b));
        return c;
    }

    [[nodiscard]] double dot(std::size_t j, std::span<const double> v) const noexcept {
        const auto [b, e] = row_range(j);
        const double* src = window(j, b);
        double acc = 0.0;
        for (std::size_t r = b; r < e; ++r) acc += src[r - b] * v[r];
        return acc;
    }

    /// v += a * column(j)
    void axpy(std::size_t j, double a, std::span<double> v) const noexcept {
        const auto [b, e] = row_range(j);
        const double* src = window(j, b);
        for (std::size_t r = b; r < e; ++r) v[r] += a * src[r - b];
    }

    [[nodiscard]] double squared_norm(std::size_t j) const noexcept {
        const auto [b, e] = row_range(j);
        const int d = lag_of_column(j);
        const auto lo = static_cast<std::size_t>(static_cast<int>(b) + d);
        const auto hi = static_cast<std::size_t>(static_cast<int>(e) + d);
        return prefix_sq_[hi] - prefix_sq_[lo];
    }

    /// S^T v, length 2n-1.
    [[nodiscard]] std::vector<double> transpose_multiply(std::span<const double> v) const {
        if (v.size() != rows()) throw Error(ErrorCode::DimensionMismatch, "S^T v: length mismatch");
        std::vector<double> out(cols());
        for (std::size_t j = 0; j < cols(); ++j) out[j] = dot(j, v);
        return out;
    }

    /// S s, length n.
    [[nodiscard]] std::vector<double> multiply(std::span<const double> s) const {
        if (s.size() != cols()) throw Error(ErrorCode::DimensionMismatch, "S s: length mismatch");
        std::vector<double> out(rows(), 0.0);
        for (std::size_t j = 0; j < cols(); ++j) {
            if (s[j] != 0.0) axpy(j, s[j], out);
        }
        return out;
    }

private:
    const double* window(std::size_t j, std::size_t row_begin) const noexcept {
        return y_.data() + static_cast<std::ptrdiff_t>(row_begin) + lag_of_column(j);
    }

    std::vector<double> y_;
    std::vector<double> prefix_sq_;
};

/// Diagonal of J_n: (1, 2, ..., n-1, n, n-1, ..., 2, 1).
[[nodiscard]] inline std::vector<double> weight_matrix_diagonal(std::size_t n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "weight diagonal needs n >= 1");
    std::vector<double> w(2 * n - 1);
    for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = static_cast<double>(j < n ? j + 1 : 2 * n - 1 - j);
    }
    return w;
}

}  // namespace sparsetde
