#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "sparsetde/error.hpp"
#include "sparsetde/gram.hpp"
#include "sparsetde/lasso.hpp"
#include "sparsetde/shift_matrix.hpp"

namespace sparsetde {

/// Cholesky factor R (upper triangular, R^T R = G) of a Gram sub-matrix that
/// grows and shrinks one variable at a time.
class UpdatableCholesky {
public:
    explicit UpdatableCholesky(std::size_t capacity)
        : cap_(capacity), r_(capacity * capacity, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return k_; }

    /// Adds a variable given its Gram entries against the current set (in
    /// order) and its own squared norm. Returns false, leaving the factor
    /// unchanged, when the variable is numerically dependent on the set.
    bool append(std::span<const double> cross, double diag) {
        if (k_ == cap_) return false;
        double* col = &at(0, k_);
        double ss = 0.0;
        for (std::size_t r = 0; r < k_; ++r) {
            double v = cross[r];
            for (std::size_t t = 0; t < r; ++t) v -= at(t, r) * col[t];
            v /= at(r, r);
            col[r] = v;
            ss += v * v;
        }
        const double pivot = diag - ss;
        if (!(pivot > kDependenceTolerance * diag)) return false;
        col[k_] = std::sqrt(pivot);
        ++k_;
        return true;
    }

    /// Drops the variable at position pos, restoring triangularity with Givens rotations.
    void remove(std::size_t pos) {
        for (std::size_t c = pos; c + 1 < k_; ++c) {
            for (std::size_t r = 0; r <= c + 1; ++r) at(r, c) = at(r, c + 1);
        }
        for (std::size_t c = pos; c + 1 < k_; ++c) {
            const double a = at(c, c);
            const double b = at(c + 1, c);
            const double h = std::hypot(a, b);
            const double cs = a / h;
            const double sn = b / h;
            for (std::size_t cc = c; cc + 1 < k_; ++cc) {
                const double t1 = at(c, cc);
                const double t2 = at(c + 1, cc);
                at(c, cc) = cs * t1 + sn * t2;
                at(c + 1, cc) = -sn * t1 + cs * t2;
            }
            at(c + 1, c) = 0.0;
        }
        --k_;
    }

    /// Solves R^T R x = b.
    void solve(std::span<const double> b, std::span<double> x) const {
        std::copy(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(k_), x.begin());
        forward(x);
        backward(x);
    }

    /// Solves R^T z = b in place.
    void forward(std::span<double> x) const noexcept {
        for (std::size_t r = 0; r < k_; ++r) {
            const double* col = r_.data() + r * cap_;
            double v = x[r];
            for (std::size_t t = 0; t < r; ++t) v -= col[t] * x[t];
            x[r] = v / col[r];
        }
    }

    /// Solves R x = z in place.
    void backward(std::span<double> x) const noexcept {
        for (std::size_t r = k_; r-- > 0;) {
            const double* col = r_.data() + r * cap_;
            const double v = x[r] /= col[r];
            for (std::size_t t = 0; t < r; ++t) x[t] -= col[t] * v;
        }
    }

    /// After append(): extends a forward solution z by the new last entry b.
    void extend_forward(std::vector<double>& z, double b) const {
        const double* col = r_.data() + (k_ - 1) * cap_;
        double v = b;
        for (std::size_t t = 0; t + 1 < k_; ++t) v -= col[t] * z[t];
        z.push_back(v / col[k_ - 1]);
    }

private:
    static constexpr double kDependenceTolerance = 1e-12;


    double& at(std::size_t r, std::size_t c) noexcept { return r_[c * cap_ + r]; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const noexcept { return r_[c * cap_ + r]; }

    std::size_t cap_;
    std::size_t k_ = 0;
    std::vector<double> r_;
};

namespace detail {

/// out = sum_a w[a] * cols[a], four columns per pass over out.
inline void combine_columns(const std::vector<std::vector<double>>& cols, std::span<const double> w,
                            std::span<double> out) noexcept {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t p = out.size();
    double* o = out.data();
    std::size_t a = 0;
    for (; a + 4 <= cols.size(); a += 4) {
        const double* g0 = cols[a].data();
        const double* g1 = cols[a + 1].data();
        const double* g2 = cols[a + 2].data();
        const double* g3 = cols[a + 3].data();
        const double w0 = w[a], w1 = w[a + 1], w2 = w[a + 2], w3 = w[a + 3];
        for (std::size_t j = 0; j < p; ++j) o[j] += g0[j] * w0 + g1[j] * w1 + g2[j] * w2 + g3[j] * w3;
    }
    for (; a < cols.size(); ++a) {
        const double* g = cols[a].data();
        const double wa = w[a];
        for (std::size_t j = 0; j < p; ++j) o[j] += g[j] * wa;
    }
}

}  // namespace detail

/// Exact LASSO solutions at each of the given decreasing penalties, by
/// following the piecewise-linear solution path (LARS with the lasso
/// modification). Between events the active coefficients solve
/// G_AA s_A = c_A - (lambda/2) sign_A, with c = D^T x and G = D^T D.
template <LinearDesign D>
[[nodiscard]] std::vector<std::vector<double>> lasso_homotopy(const D& design,
                                                              std::span<const double> response,
                                                              std::span<const double> lambdas) {
    detail::require_response(design, response);
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (!(lambdas[i] < lambdas[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "penalties must be strictly decreasing");
        }
    }
    const std::size_t p = design.cols();
    std::vector<std::vector<double>> out(lambdas.size(), std::vector<double>(p, 0.0));
    if (lambdas.empty()) return out;
    if (lambdas.back() < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");

    std::vector<double> c(p);
    for (std::size_t j = 0; j < p; ++j) c[j] = design.dot(j, response);

    std::size_t first = 0;
    double mu = 0.0;
    for (double v : c) mu = std::max(mu, std::abs(v));
    while (first < lambdas.size() && lambdas[first] / 2.0 >= mu) ++first;
    if (first == lambdas.size()) return out;

    const GramColumns<D> gram(design);
    const std::size_t capacity = std::min(design.rows(), p) + 1;
    UpdatableCholesky chol(capacity);

    std::vector<std::size_t> active;
    std::vector<double> sign;
    std::vector<std::vector<double>> gcols;
    std::vector<char> in_active(p, 0);
    std::vector<char> excluded(p, 0);
    std::vector<double> s(p, 0.0);

    std::vector<double> cross;
    std::vector<double> z;  // R^-T sign, so each direction needs one back substitution
    auto try_join = [&](std::size_t j, double sgn) {
        std::vector<double> col(p);
        gram.column(j, col);
        cross.resize(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) cross[a] = col[active[a]];
        if (!chol.append(cross, col[j])) {
            excluded[j] = 1;
            return;
        }
        active.push_back(j);
        sign.push_back(sgn);
        gcols.push_back(std::move(col));
        in_active[j] = 1;
        chol.extend_forward(z, sgn);
    };

    {
        std::size_t best = 0;
        for (std::size_t j = 1; j < p; ++j) {
            if (std::abs(c[j]) > std::abs(c[best])) best = j;
        }
        try_join(best, c[best] > 0 ? 1.0 : -1.0);
    }

    std::vector<double> rhs;
    std::vector<double> dir;
    std::vector<double> resid(c);  // c - G s, updated along each linear segment
    std::vector<double> slope(p);
    std::size_t target = first;
    const std::size_t max_steps = 50 * p + 100;
    constexpr std::size_t kRefreshEvery = 32;

    auto refresh_resid = [&] {
        rhs.resize(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) rhs[a] = s[active[a]];
        detail::combine_columns(gcols, rhs, resid);
        for (std::size_t j = 0; j < p; ++j) resid[j] = c[j] - resid[j];
    };

    for (std::size_t step = 0; target < lambdas.size(); ++step) {
        if (step > max_steps) throw NonConvergenceError(2.0 * mu, step, "homotopy", "steps");
        const std::size_t k = active.size();
        if (step % kRefreshEvery == kRefreshEvery - 1) {
            // Re-anchor the incrementally updated quantities against drift.
            rhs.resize(k);
            for (std::size_t a = 0; a < k; ++a) rhs[a] = c[active[a]] - mu * sign[a];
            chol.forward(rhs);
            chol.backward(rhs);
            for (std::size_t a = 0; a < k; ++a) s[active[a]] = rhs[a];
            refresh_resid();
        }

        dir.assign(z.begin(), z.end());
        chol.backward(dir);

        detail::combine_columns(gcols, dir, slope);

        // Step length in mu until the next event or the next requested penalty.
        const double to_target = mu - lambdas[target] / 2.0;
        double step_len = to_target;
        enum class Event { Target, Join, Leave } event = Event::Target;
        std::size_t who = 0;
        const double tiny = 1e-14 * std::max(1.0, mu);

        for (std::size_t a = 0; a < k; ++a) {
            // Only coefficients heading toward zero can leave; a fresh entrant
            // sits at ~0 with arbitrary rounding sign.
            const double toward = dir[a] * sign[a];
            if (toward >= 0.0) continue;
            const double t = std::max(0.0, s[active[a]] * sign[a]) / -toward;
            if (t < step_len) {
                step_len = t;
                event = Event::Leave;
                who = a;
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (in_active[j] || excluded[j]) continue;
            const double r = resid[j];
            const double a = slope[j];
            if (std::abs(r) >= mu - tiny) {
                // On the boundary: harmless if it moves inward (a column that
                // just left does) or along it, otherwise it has to join now.
                if ((r > 0 ? a : -a) >= 1.0 - 1e-9) continue;
                step_len = 0.0;
                event = Event::Join;
                who = j;
                break;
            }
            if (1.0 - a > 0.0) {
                const double t = (mu - r) / (1.0 - a);
                if (t > tiny && t < step_len) {
                    step_len = t;
                    event = Event::Join;
                    who = j;
                }
            }
            if (1.0 + a > 0.0) {
                const double t = (mu + r) / (1.0 + a);
                if (t > tiny && t < step_len) {
                    step_len = t;
                    event = Event::Join;
                    who = j;
                }
            }
        }

        mu -= step_len;
        for (std::size_t a = 0; a < k; ++a) s[active[a]] += step_len * dir[a];
        if (step_len != 0.0) {
            for (std::size_t j = 0; j < p; ++j) resid[j] -= step_len * slope[j];
        }

        switch (event) {
            case Event::Target:
                mu = lambdas[target] / 2.0;
                out[target] = s;
                // Fresh entrants from a tie can carry a rounding-sized value of
                // the wrong sign; their exact value is zero.
                for (std::size_t a = 0; a < active.size(); ++a) {
                    if (s[active[a]] * sign[a] <= 0.0) out[target][active[a]] = 0.0;
                }
                ++target;
                break;
            case Event::Leave: {
                const std::size_t col = active[who];
                s[col] = 0.0;
                in_active[col] = 0;
                active.erase(active.begin() + static_cast<std::ptrdiff_t>(who));
                sign.erase(sign.begin() + static_cast<std::ptrdiff_t>(who));
                gcols.erase(gcols.begin() + static_cast<std::ptrdiff_t>(who));
                chol.remove(who);
                z = sign;
                chol.forward(z);
                // A smaller active set may now accept columns rejected as dependent.
                std::fill(excluded.begin(), excluded.end(), 0);
                // A smaller active set may now accept columns rejected as dependent.
                std::fill(excluded.begin(), excluded.end(), 0);
                break;
            }
            case Event::Join: {
                try_join(who, resid[who] > 0 ? 1.0 : -1.0);
                break;
            }
        }
    }
    return out;
}

struct PathOptions {
    std::size_t length = 100;
    double lambda_min_ratio = 1e-3;
};

/// Fits ordered by strictly decreasing lambda; entry 0 is the zero fit at lambda_max.
struct SolutionPath {
    std::vector<LassoFit> entries;

    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
    [[nodiscard]] std::vector<double> lambdas() const {
        std::vector<double> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.lambda);
        return out;
    }
};

/// lambda_max * ratio^(k / (length - 1)), k = 0..length-1. A zero lambda_max
/// (all-zero response) is replaced by 1 so the grid stays strictly decreasing.
[[nodiscard]] inline std::vector<double> lambda_grid(double lambda_max_value,
                                                     const PathOptions& options) {
    if (options.length < 2) throw Error(ErrorCode::InvalidArgument, "path length must be >= 2");
    if (!(options.lambda_min_ratio > 0.0 && options.lambda_min_ratio < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "lambda_min_ratio must lie in (0, 1)");
    }
    const double top = lambda_max_value > 0.0 ? lambda_max_value : 1.0;
    std::vector<double> grid(options.length);
    const double step =
        std::log(options.lambda_min_ratio) / static_cast<double>(options.length - 1);
    for (std::size_t k = 0; k < options.length; ++k) {
        grid[k] = top * std::exp(step * static_cast<double>(k));
    }
    grid.back() = top * options.lambda_min_ratio;
    return grid;
}

/// Path fits at explicit decreasing penalties. Each homotopy solution is
/// checked against the KKT certificate and, if it misses, refined by
/// coordinate descent from that point.
template <LinearDesign D>
[[nodiscard]] SolutionPath fit_path(const D& design, std::span<const double> response,
                                    std::span<const double> lambdas,
                                    const SolverOptions& options = {}) {
    auto coefficients = lasso_homotopy(design, response, lambdas);
    SolutionPath path;
    path.entries.reserve(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        LassoFit fit;
        if (kkt_violation(design, response, coefficients[i], lambdas[i]) <= options.kkt_tolerance) {
            fit.lambda = lambdas[i];
            fit.coefficients = std::move(coefficients[i]);
            fit.nonzero_count = static_cast<std::size_t>(std::count_if(
                fit.coefficients.begin(), fit.coefficients.end(), [](double v) { return v != 0.0; }));
            fit.objective = lasso_objective(design, response, fit.coefficients, fit.lambda);
        } else {
            fit = fit_lasso(design, response, lambdas[i], coefficients[i], options);
        }
        path.entries.push_back(std::move(fit));
    }
    return path;
}

template <LinearDesign D>
[[nodiscard]] SolutionPath solution_path(const D& design, std::span<const double> response,
                                         const PathOptions& path_options = {},
                                         const SolverOptions& options = {}) {
    const auto lambdas = lambda_grid(lambda_max(design, response), path_options);
    return fit_path(design, response, lambdas, options);
}

/// Lower empirical q-quantile of the path's lambdas.
struct QuantileOfPath {
    double q = 0.1;
};

/// K-fold cross-validation over the path's lambdas; folds == 0 means
/// leave-one-out. Row r belongs to fold r mod K.
struct CrossValidation {
    std::size_t folds = 0;
};

using LambdaSelection = std::variant<QuantileOfPath, CrossValidation>;

struct LambdaChoice {
    std::size_t index = 0;  // position in the path
    double lambda = 0.0;
    std::vector<double> cv_error;  // mean held-out squared error per path entry (CV only)
};

/// Element of rank ceil(q * N) (1-based) in the ascending sort.
[[nodiscard]] inline double lower_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::Empty, "quantile of an empty set");
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "quantile must lie in (0, 1)");
    }
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

/// Mean held-out squared prediction error at each penalty.
template <LinearDesign D>
[[nodiscard]] std::vector<double> cross_validation_error(const D& design,
                                                         std::span<const double> response,
                                                         std::span<const double> lambdas,
                                                         std::size_t folds) {
    detail::require_response(design, response);
    const std::size_t n = design.rows();
    const std::size_t k = folds == 0 ? n : std::min(folds, n);
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");

    std::vector<double> sse(lambdas.size(), 0.0);
    std::vector<double> masked(response.size());
    for (std::size_t fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> held;
        for (std::size_t r = fold; r < n; r += k) held.push_back(r);
        const RowMaskedDesign<D> train(design, held);

        std::copy(response.begin(), response.end(), masked.begin());
        for (std::size_t r : held) masked[r] = 0.0;

        const auto fits = lasso_homotopy(train, masked, lambdas);
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            const auto& s = fits[li];
            for (std::size_t r : held) {
                double pred = 0.0;
                for (std::size_t j = 0; j < s.size(); ++j) {
                    if (s[j] != 0.0) pred += design.entry(r, j) * s[j];
                }
                const double err = response[r] - pred;
                sse[li] += err * err;
            }
        }
    }
    for (double& e : sse) e /= static_cast<double>(n);
    return sse;
}

/// Picks a path entry. Cross-validation minimizes the mean held-out squared
/// error; ties go to the larger lambda.
template <LinearDesign D>
[[nodiscard]] LambdaChoice select_lambda(const SolutionPath& path, const LambdaSelection& rule,
                                         const D& design, std::span<const double> response) {
    if (path.empty()) throw Error(ErrorCode::EmptyPath, "cannot select lambda from an empty path");
    const auto lambdas = path.lambdas();
    LambdaChoice choice;
    if (path.size() == 1) {
        choice.lambda = lambdas.front();
        return choice;
    }

    if (const auto* quantile = std::get_if<QuantileOfPath>(&rule)) {
        choice.lambda = lower_quantile(lambdas, quantile->q);
        choice.index = static_cast<std::size_t>(
            std::find(lambdas.begin(), lambdas.end(), choice.lambda) - lambdas.begin());
        return choice;
    }

    const auto& cv = std::get<CrossValidation>(rule);
    choice.cv_error = cross_validation_error(design, response, lambdas, cv.folds);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < choice.cv_error.size(); ++i) {
        if (choice.cv_error[i] < best) {
            best = choice.cv_error[i];
            choice.index = i;
        }
    }
    choice.lambda = lambdas[choice.index];
    return choice;
}

/// x_tilde = S s
[[nodiscard]] inline std::vector<double> sparse_reconstruct(const ShiftMatrix& design,
                                                            const LassoFit& fit) {
    return design.multiply(fit.coefficients);
}

}  // namespace sparsetde
