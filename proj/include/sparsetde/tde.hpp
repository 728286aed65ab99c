#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sparsetde/association.hpp"
#include "sparsetde/error.hpp"
#include "sparsetde/lag_grid.hpp"
#include "sparsetde/lasso.hpp"
#include "sparsetde/lasso_path.hpp"
#include "sparsetde/pvalue.hpp"
#include "sparsetde/shift_matrix.hpp"
#include "sparsetde/signal.hpp"

namespace sparsetde {

enum class Family { Pearson, Lasso };

struct EstimatorSpec {
    std::string name;  // stable identifier, e.g. "lasso-cv-cor"
    Family family = Family::Pearson;
    ScalingMode scaling = ScalingMode::Unscaled;
    std::optional<LambdaSelection> lambda_rule;  // Lasso only
    bool cor_after = false;  // Lasso only: Standard scaling on (x_tilde, y)

    void validate() const {
        if (family == Family::Pearson && (lambda_rule || cor_after)) {
            throw Error(ErrorCode::InvalidArgument, "Pearson estimators take no penalty rule");
        }
        if (family == Family::Lasso && !lambda_rule) {
            throw Error(ErrorCode::InvalidArgument, "Lasso estimators need a penalty rule");
        }
    }

    /// Association mode used for the final argmax.
    [[nodiscard]] ScalingMode search_scaling() const noexcept {
        if (family == Family::Pearson) return scaling;
        return cor_after ? ScalingMode::Standard : ScalingMode::Unscaled;
    }
};

/// Identifiers of the seven built-in estimators, in reporting order.
inline constexpr std::array<std::string_view, 7> kEstimatorNames{
    "pn", "pn-trim", "pn-standard", "lasso-0.1", "lasso-cor-0.1", "lasso-cv", "lasso-cv-cor"};

inline constexpr std::size_t kDefaultCvFolds = 10;

/// Built-in estimator by identifier. `cv_folds` applies to the CV estimators
/// (0 = leave-one-out).
[[nodiscard]] inline EstimatorSpec named_estimator(std::string_view name,
                                                   std::size_t cv_folds = kDefaultCvFolds) {
    EstimatorSpec spec;
    spec.name = std::string(name);
    if (name == "pn") return spec;
    if (name == "pn-trim") {
        spec.scaling = ScalingMode::Trimmed;
        return spec;
    }
    if (name == "pn-standard") {
        spec.scaling = ScalingMode::Standard;
        return spec;
    }
    spec.family = Family::Lasso;
    if (name == "lasso-0.1" || name == "lasso-cor-0.1") {
        spec.lambda_rule = QuantileOfPath{0.1};
        spec.cor_after = name == "lasso-cor-0.1";
        return spec;
    }
    if (name == "lasso-cv" || name == "lasso-cv-cor") {
        spec.lambda_rule = CrossValidation{cv_folds};
        spec.cor_after = name == "lasso-cv-cor";
        return spec;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

[[nodiscard]] inline std::vector<EstimatorSpec> all_estimators(std::size_t cv_folds = kDefaultCvFolds) {
    std::vector<EstimatorSpec> out;
    for (auto name : kEstimatorNames) out.push_back(named_estimator(name, cv_folds));
    return out;
}

/// Table label for a built-in identifier (Pn, Pn_trim, ..., L^cor_CV).
[[nodiscard]] inline std::string display_name(std::string_view name) {
    if (name == "pn") return "Pn";
    if (name == "pn-trim") return "Pn_trim";
    if (name == "pn-standard") return "Pn_standard";
    if (name == "lasso-0.1") return "L_0.1";
    if (name == "lasso-cor-0.1") return "L^cor_0.1";
    if (name == "lasso-cv") return "L_CV";
    if (name == "lasso-cv-cor") return "L^cor_CV";
    return std::string(name);
}

struct TdeResult {
    int lag_hat = 0;
    double gamma_at_lag = 0.0;
    double p_value = 1.0;
    std::size_t overlap_length = 0;
    EstimatorSpec spec;
    std::optional<double> lambda;  // Lasso only
};

/// Index of the largest gamma^2; ties go to the smallest |lag|, then the
/// negative lag.
[[nodiscard]] inline std::size_t argmax_squared(const AssociationProfile& profile) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < profile.gamma.size(); ++i) {
        const double gi = profile.gamma[i] * profile.gamma[i];
        const double gb = profile.gamma[best] * profile.gamma[best];
        if (gi > gb) {
            best = i;
        } else if (gi == gb) {
            const int li = profile.grid[i];
            const int lb = profile.grid[best];
            if (std::abs(li) < std::abs(lb) || (std::abs(li) == std::abs(lb) && li < lb)) best = i;
        }
    }
    return best;
}

struct LassoSettings {
    PathOptions path;
    SolverOptions solver;
};

/// Runs several estimators on one pair, sharing the standardized copies, the
/// solution path and the cross-validation choices between them.
class DelayEstimator {
public:
    DelayEstimator(Signal x, Signal y, LassoSettings settings = {})
        : x_(std::move(x)), y_(std::move(y)), settings_(settings) {
        detail::require_same_length(x_, y_);
    }

    [[nodiscard]] const Signal& x() const noexcept { return x_; }
    [[nodiscard]] const Signal& y() const noexcept { return y_; }

    [[nodiscard]] TdeResult estimate(const LagGrid& grid, const EstimatorSpec& spec) {
        spec.validate();
        if (grid.sample_size() != x_.size()) {
            throw Error(ErrorCode::DimensionMismatch, "grid was built for a different sample size");
        }
        (void)standardized();  // constant inputs fail here with ZeroVariance
        TdeResult out;
        out.spec = spec;
        AssociationProfile profile{grid, {}, spec.search_scaling()};
        if (spec.family == Family::Pearson) {
            profile = association_profile(x_, y_, grid, spec.scaling);
        } else {
            const auto& [lambda, x_tilde] = reconstruction(*spec.lambda_rule);
            out.lambda = lambda;
            profile = association_profile(x_tilde, standardized().second, grid, spec.search_scaling());
        }
        const std::size_t best = argmax_squared(profile);
        out.lag_hat = grid[best];
        out.gamma_at_lag = profile.gamma[best];
        out.overlap_length = x_.size() - static_cast<std::size_t>(std::abs(out.lag_hat));
        out.p_value = significance(out.lag_hat);
        return out;
    }

    /// p-value of the overlap-segment correlation of the input pair at `lag`.
    /// Segments too short for the test, or constant, give 1.
    [[nodiscard]] double significance(int lag) const {
        const std::size_t m = x_.size() - static_cast<std::size_t>(std::abs(lag));
        if (m < 3) return 1.0;
        try {
            return no_correlation_pvalue(association_at_lag(x_, y_, lag, ScalingMode::Trimmed), m);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ZeroVariance) return 1.0;
            throw;
        }
    }

private:
    struct Reconstruction {
        double lambda;
        Signal x_tilde;
    };

    const std::pair<Signal, Signal>& standardized() {
        if (!standardized_) standardized_.emplace(standardize(x_), standardize(y_));
        return *standardized_;
    }

    const ShiftMatrix& design() {
        if (!design_) design_.emplace(standardized().second);
        return *design_;
    }

    const SolutionPath& path() {
        if (!path_) {
            path_ = solution_path(design(), standardized().first.values(), settings_.path, settings_.solver);
        }
        return *path_;
    }

    std::size_t choice_index(const LambdaSelection& rule) {
        if (const auto* q = std::get_if<QuantileOfPath>(&rule)) {
            return select_lambda(path(), *q, design(), standardized().first.values()).index;
        }
        const std::size_t folds = std::get<CrossValidation>(rule).folds;
        auto it = cv_choice_.find(folds);
        if (it == cv_choice_.end()) {
            const auto choice = select_lambda(path(), rule, design(), standardized().first.values());
            it = cv_choice_.emplace(folds, choice.index).first;
        }
        return it->second;
    }

    Reconstruction reconstruction(const LambdaSelection& rule) {
        const std::size_t index = choice_index(rule);
        const LassoFit& fit = path().entries[index];
        auto x_tilde = sparse_reconstruct(design(), fit);
        if (std::all_of(x_tilde.begin(), x_tilde.end(), [](double v) { return v == 0.0; })) {
            throw Error(ErrorCode::AllZeroReconstruction,
                        "penalty " + std::to_string(fit.lambda) + " zeroes the reconstruction");
        }
        return {fit.lambda, Signal(std::move(x_tilde))};
    }

    Signal x_;
    Signal y_;
    LassoSettings settings_;
    std::optional<std::pair<Signal, Signal>> standardized_;
    std::optional<ShiftMatrix> design_;
    std::optional<SolutionPath> path_;
    std::map<std::size_t, std::size_t> cv_choice_;
};

/// Delay estimate for one pair. Pearson estimators use the pair as given;
/// Lasso estimators standardize both series, regress x on the shift matrix of
/// y, and search the association of the reconstruction with y.
[[nodiscard]] inline TdeResult estimate_delay(const Signal& x, const Signal& y, const LagGrid& grid,
                                              const EstimatorSpec& spec, const LassoSettings& settings = {}) {
    DelayEstimator est(x, y, settings);
    return est.estimate(grid, spec);
}

struct AnnualSummary {
    std::vector<TdeResult> results;
    std::optional<double> median_lag;  // empty when nothing is significant
    std::optional<double> robust_sd;
    double significant_fraction = 0.0;
    std::size_t significant_count = 0;

    [[nodiscard]] bool significant() const noexcept { return median_lag.has_value(); }
};

[[nodiscard]] inline double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::Empty, "median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// 1.4826 * median absolute deviation from the median.
[[nodiscard]] inline double robust_sd(std::span<const double> v) {
    const double med = median(std::vector<double>(v.begin(), v.end()));
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double d : v) dev.push_back(std::abs(d - med));
    return 1.4826 * median(std::move(dev));
}

/// Median and robust spread of the lags whose p-value is below alpha.
[[nodiscard]] inline AnnualSummary aggregate_years(std::vector<TdeResult> results, double alpha) {
    if (results.empty()) throw Error(ErrorCode::Empty, "no per-year results to aggregate");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    AnnualSummary out;
    std::vector<double> lags;
    for (const auto& r : results) {
        if (r.p_value < alpha) lags.push_back(static_cast<double>(r.lag_hat));
    }
    out.significant_count = lags.size();
    out.significant_fraction = static_cast<double>(lags.size()) / static_cast<double>(results.size());
    if (!lags.empty()) {
        out.median_lag = median(lags);
        out.robust_sd = robust_sd(lags);
    }
    out.results = std::move(results);
    return out;
}

}  // namespace sparsetde
