#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <vector>

#include "sparsetde/lasso.hpp"
#include "sparsetde/shift_matrix.hpp"

namespace sparsetde {

/// Columns of D^T D on demand. The generic version costs O(rows * cols) per column.
template <LinearDesign D>
class GramColumns {
public:
    explicit GramColumns(const D& design) : design_(&design), scratch_(design.rows()) {}

    void column(std::size_t j, std::span<double> out) const {
        for (std::size_t r = 0; r < design_->rows(); ++r) scratch_[r] = design_->entry(r, j);
        for (std::size_t i = 0; i < design_->cols(); ++i) out[i] = design_->dot(i, scratch_);
    }

private:
    const D* design_;
    mutable std::vector<double> scratch_;
};

/// Shift matrices have a Toeplitz-like Gram: entry (i, j) is a windowed sum of
/// y[u] * y[u + m] with m the lag difference, so prefix sums of every lagged
/// product give each entry in O(1).
template <>
class GramColumns<ShiftMatrix> {
public:
    explicit GramColumns(const ShiftMatrix& design) : design_(&design) {
        const auto y = design.source();
        const std::size_t n = y.size();
        offsets_.resize(n);
        std::size_t total = 0;
        for (std::size_t m = 0; m < n; ++m) {
            offsets_[m] = total;
            total += n - m + 1;
        }
        prefix_.resize(total);
        for (std::size_t m = 0; m < n; ++m) {
            double* q = prefix_.data() + offsets_[m];
            q[0] = 0.0;
            for (std::size_t u = 0; u + m < n; ++u) q[u + 1] = q[u] + y[u] * y[u + m];
        }
    }

    [[nodiscard]] double entry(std::size_t i, std::size_t j) const noexcept {
        const int n = static_cast<int>(design_->rows());
        const int di = design_->lag_of_column(i);
        const int dj = design_->lag_of_column(j);
        const int lo = std::max({0, -di, -dj});
        const int hi = std::min({n, n - di, n - dj});
        if (hi <= lo) return 0.0;
        const int base = di <= dj ? di : dj;
        const auto m = static_cast<std::size_t>(std::abs(dj - di));
        const double* q = prefix_.data() + offsets_[m];
        return q[hi + base] - q[lo + base];
    }

    void column(std::size_t j, std::span<double> out) const noexcept {
        for (std::size_t i = 0; i < design_->cols(); ++i) out[i] = entry(i, j);
    }

private:
    const ShiftMatrix* design_;
    std::vector<std::size_t> offsets_;
    std::vector<double> prefix_;
};

/// Held-out rows are subtracted as rank-one corrections; row r of a shift
/// matrix is a contiguous run of y, so each correction is O(n).
template <>
class GramColumns<RowMaskedDesign<ShiftMatrix>> {
public:
    explicit GramColumns(const RowMaskedDesign<ShiftMatrix>& design)
        : base_(&design.base()),
          held_out_(design.held_out().begin(), design.held_out().end()),
          full_(design.base()) {}

    void column(std::size_t j, std::span<double> out) const noexcept {
        full_.column(j, out);
        const auto y = base_->source();
        const std::size_t n = base_->rows();
        for (std::size_t r : held_out_) {
            const double srj = base_->entry(r, j);
            if (srj == 0.0) continue;
            // Row r is nonzero in columns [n-1-r, 2n-2-r] with value y[r + i - (n-1)].
            const std::size_t first = n - 1 - r;
            for (std::size_t k = 0; k < n; ++k) out[first + k] -= srj * y[k];
        }
    }

private:
    const ShiftMatrix* base_;
    std::vector<std::size_t> held_out_;
    GramColumns<ShiftMatrix> full_;
};

}  // namespace sparsetde
