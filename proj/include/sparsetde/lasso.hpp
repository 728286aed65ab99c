#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/shift_matrix.hpp"
#include "sparsetde/signal.hpp"

namespace sparsetde {

// The penalized problem solved here is
//
//     minimize_s  ||x - D s||^2 + lambda * ||s||_1
//
// with no 1/(2n) normalization, so the gradient of the smooth part is
// -2 D^T (x - D s) and the all-zero solution holds for lambda >= max |2 D^T x|.

/// Column access needed by the coordinate-descent solver.
template <class D>
concept LinearDesign = requires(const D& d, std::size_t j, std::size_t r,
                                std::span<const double> v, std::span<double> w, double a) {
    { d.rows() } -> std::convertible_to<std::size_t>;
    { d.cols() } -> std::convertible_to<std::size_t>;
    { d.dot(j, v) } -> std::convertible_to<double>;
    { d.squared_norm(j) } -> std::convertible_to<double>;
    { d.entry(r, j) } -> std::convertible_to<double>;
    d.axpy(j, a, w);
};

/// Column-major dense design, mostly for small oracle sub-problems.
class DenseDesign {
public:
    DenseDesign(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    /// Picks the given columns out of another design.
    template <LinearDesign D>
    static DenseDesign from_columns(const D& source, std::span<const std::size_t> columns) {
        DenseDesign out(source.rows(), columns.size());
        for (std::size_t c = 0; c < columns.size(); ++c) {
            for (std::size_t r = 0; r < source.rows(); ++r) out(r, c) = source.entry(r, columns[c]);
        }
        return out;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[c * rows_ + r]; }
    [[nodiscard]] double entry(std::size_t r, std::size_t c) const noexcept {
        return data_[c * rows_ + r];
    }

    [[nodiscard]] double dot(std::size_t j, std::span<const double> v) const noexcept {
        const double* col = data_.data() + j * rows_;
        double acc = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) acc += col[r] * v[r];
        return acc;
    }
    void axpy(std::size_t j, double a, std::span<double> v) const noexcept {
        const double* col = data_.data() + j * rows_;
        for (std::size_t r = 0; r < rows_; ++r) v[r] += a * col[r];
    }
    [[nodiscard]] double squared_norm(std::size_t j) const noexcept {
        const double* col = data_.data() + j * rows_;
        double acc = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) acc += col[r] * col[r];
        return acc;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// A design with some rows removed (treated as zero), used for held-out folds.
template <LinearDesign D>
class RowMaskedDesign {
public:
    RowMaskedDesign(const D& base, std::vector<std::size_t> held_out)
        : base_(&base), held_out_(std::move(held_out)), norms_(base.cols()) {
        for (std::size_t j = 0; j < base.cols(); ++j) {
            double sq = base.squared_norm(j);
            for (std::size_t r : held_out_) {
                const double e = base.entry(r, j);
                sq -= e * e;
            }
            norms_[j] = std::max(sq, 0.0);
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return base_->rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return base_->cols(); }
    [[nodiscard]] std::span<const std::size_t> held_out() const noexcept { return held_out_; }
    [[nodiscard]] const D& base() const noexcept { return *base_; }

    [[nodiscard]] double entry(std::size_t r, std::size_t j) const noexcept {
        return is_held_out(r) ? 0.0 : base_->entry(r, j);
    }
    [[nodiscard]] double dot(std::size_t j, std::span<const double> v) const noexcept {
        double acc = base_->dot(j, v);
        for (std::size_t r : held_out_) acc -= base_->entry(r, j) * v[r];
        return acc;
    }
    void axpy(std::size_t j, double a, std::span<double> v) const noexcept {
        std::vector<double> saved;
        saved.reserve(held_out_.size());
        for (std::size_t r : held_out_) saved.push_back(v[r]);
        base_->axpy(j, a, v);
        for (std::size_t i = 0; i < held_out_.size(); ++i) v[held_out_[i]] = saved[i];
    }
    [[nodiscard]] double squared_norm(std::size_t j) const noexcept { return norms_[j]; }

private:
    [[nodiscard]] bool is_held_out(std::size_t r) const noexcept {
        return std::find(held_out_.begin(), held_out_.end(), r) != held_out_.end();
    }

    const D* base_;
    std::vector<std::size_t> held_out_;
    std::vector<double> norms_;
};

static_assert(LinearDesign<ShiftMatrix>);
static_assert(LinearDesign<DenseDesign>);
static_assert(LinearDesign<RowMaskedDesign<ShiftMatrix>>);

struct SolverOptions {
    double tolerance = 1e-9;          // largest coordinate change accepted as converged
    std::size_t max_sweeps = 10'000;  // full and active-set sweeps both count
    double kkt_tolerance = 1e-6;
};

struct LassoFit {
    std::vector<double> coefficients;
    double lambda = 0.0;
    std::size_t nonzero_count = 0;
    double objective = 0.0;
    std::size_t sweeps = 0;
};

[[nodiscard]] inline double soft_threshold(double z, double t) noexcept {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

namespace detail {

template <LinearDesign D>
void require_response(const D& design, std::span<const double> response) {
    if (response.size() != design.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "response length differs from design rows");
    }
}

template <LinearDesign D>
std::vector<double> residual_of(const D& design, std::span<const double> response,
                                std::span<const double> coefficients) {
    std::vector<double> res(response.begin(), response.end());
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
        if (coefficients[j] != 0.0) design.axpy(j, -coefficients[j], res);
    }
    return res;
}

}  // namespace detail

/// ||x - D s||^2 + lambda ||s||_1
template <LinearDesign D>
[[nodiscard]] double lasso_objective(const D& design, std::span<const double> response,
                                     std::span<const double> coefficients, double lambda) {
    detail::require_response(design, response);
    const auto res = detail::residual_of(design, response, coefficients);
    double rss = 0.0;
    for (double r : res) rss += r * r;
    double l1 = 0.0;
    for (double s : coefficients) l1 += std::abs(s);
    return rss + lambda * l1;
}

/// Smallest penalty whose solution is identically zero: max_j |2 d_j . x|.
template <LinearDesign D>
[[nodiscard]] double lambda_max(const D& design, std::span<const double> response) {
    detail::require_response(design, response);
    double best = 0.0;
    for (std::size_t j = 0; j < design.cols(); ++j) {
        best = std::max(best, std::abs(2.0 * design.dot(j, response)));
    }
    return best;
}

/// Largest violation of the subgradient optimality conditions at `fit`.
template <LinearDesign D>
[[nodiscard]] double kkt_violation(const D& design, std::span<const double> response,
                                   std::span<const double> coefficients, double lambda) {
    const auto res = detail::residual_of(design, response, coefficients);
    double worst = 0.0;
    for (std::size_t j = 0; j < design.cols(); ++j) {
        const double grad = -2.0 * design.dot(j, res);
        const double s = coefficients[j];
        const double v = s != 0.0 ? std::abs(grad + lambda * (s > 0 ? 1.0 : -1.0))
                                  : std::max(0.0, std::abs(grad) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

/// Cyclic coordinate descent with an active-set inner loop. Converged when a
/// full sweep moves no coordinate by more than `tolerance` and the KKT
/// certificate holds at `kkt_tolerance`.
template <LinearDesign D>
[[nodiscard]] LassoFit fit_lasso(const D& design, std::span<const double> response, double lambda,
                                 std::span<const double> warm_start = {},
                                 const SolverOptions& options = {}) {
    detail::require_response(design, response);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be a nonnegative finite number");
    }
    const std::size_t p = design.cols();
    if (!warm_start.empty() && warm_start.size() != p) {
        throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong length");
    }

    LassoFit out;
    out.lambda = lambda;
    out.coefficients.assign(p, 0.0);

    const bool zero_response =
        std::all_of(response.begin(), response.end(), [](double v) { return v == 0.0; });
    if (zero_response) return out;

    if (!warm_start.empty()) std::copy(warm_start.begin(), warm_start.end(), out.coefficients.begin());
    auto& s = out.coefficients;
    auto res = detail::residual_of(design, response, s);

    std::vector<double> norms(p);
    for (std::size_t j = 0; j < p; ++j) norms[j] = design.squared_norm(j);

    const double half_lambda = 0.5 * lambda;
    auto update = [&](std::size_t j) -> double {
        const double old = s[j];
        if (norms[j] <= 0.0) {
            if (old != 0.0) {
                design.axpy(j, old, res);
                s[j] = 0.0;
            }
            return std::abs(old);
        }
        const double z = design.dot(j, res) + norms[j] * old;
        const double fresh = soft_threshold(z, half_lambda) / norms[j];
        if (fresh != old) {
            design.axpy(j, old - fresh, res);
            s[j] = fresh;
        }
        return std::abs(fresh - old);
    };

    std::vector<std::size_t> active;
    std::size_t sweeps = 0;
    auto tick = [&] {
        if (++sweeps > options.max_sweeps) throw NonConvergenceError(lambda, options.max_sweeps);
    };

    while (true) {
        tick();
        double change = 0.0;
        for (std::size_t j = 0; j < p; ++j) change = std::max(change, update(j));

        if (change <= options.tolerance) {
            if (kkt_violation(design, response, s, lambda) <= options.kkt_tolerance) break;
            continue;
        }

        active.clear();
        for (std::size_t j = 0; j < p; ++j) {
            if (s[j] != 0.0) active.push_back(j);
        }
        do {
            tick();
            change = 0.0;
            for (std::size_t j : active) change = std::max(change, update(j));
        } while (change > options.tolerance);
    }

    out.sweeps = sweeps;
    out.nonzero_count = static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](double v) { return v != 0.0; }));
    double rss = 0.0;
    for (double r : res) rss += r * r;
    double l1 = 0.0;
    for (double v : s) l1 += std::abs(v);
    out.objective = rss + lambda * l1;
    return out;
}

}  // namespace sparsetde
