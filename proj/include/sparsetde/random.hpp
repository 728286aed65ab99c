#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sparsetde {

/// SplitMix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of replicate `index` under `root`; independent of execution order.
[[nodiscard]] constexpr std::uint64_t replicate_seed(std::uint64_t root, std::uint64_t index) noexcept {
    return mix_seed(mix_seed(root) ^ mix_seed(index + 0x5851f42d4c957f2dULL));
}

/// Mersenne twister plus hand-written variate transforms, so a seed gives the
/// same numbers on every standard library (the std:: distributions do not
/// guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Exponential with the given mean.
    double exponential(double mean) noexcept { return -mean * std::log1p(-uniform()); }

    /// Standard normal, Marsaglia polar method.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sparsetde
