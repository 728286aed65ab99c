#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sparsetde/error.hpp"

namespace sparsetde {

/// An ordered, finite, real-valued series with at least two samples.
class Signal {
public:
    explicit Signal(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2) {
            throw Error(ErrorCode::InvalidSignal, "a signal needs at least two samples");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw Error(ErrorCode::InvalidSignal,
                            "non-finite sample at index " + std::to_string(i));
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
    [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
    [[nodiscard]] auto end() const noexcept { return values_.end(); }

    friend bool operator==(const Signal&, const Signal&) = default;

private:
    std::vector<double> values_;
};

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

/// Mean and population standard deviation (divisor n), two-pass.
[[nodiscard]] inline Moments population_moments(std::span<const double> v) {
    if (v.empty()) {
        throw Error(ErrorCode::Empty, "moments of an empty sequence");
    }
    double sum = 0.0;
    for (double a : v) sum += a;
    const double mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

/// Centers to mean 0 and scales to population sd 1.
[[nodiscard]] inline Signal standardize(const Signal& x) {
    const auto [mean, sd] = population_moments(x.values());
    if (!(sd > 0.0)) {
        throw Error(ErrorCode::ZeroVariance, "cannot standardize a constant signal");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
    return Signal(std::move(out));
}

}  // namespace sparsetde
