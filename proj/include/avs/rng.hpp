#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace avs {

/// Counter-based SplitMix64 generator.
///
/// Output i of stream (seed, key) is mix(seed ^ key_hash + (i + 1) * golden),
/// so every draw is a pure function of (seed, key, counter) and identical on
/// every platform. Floating-point conversions below use only exact integer to
/// double steps plus std::log/sqrt/cos for the normal draws.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(seed ^ mix(stream + kGolden)) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(base_ + counter_ * kGolden);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (one value per two uniforms).
    double normal() {
        double u1 = next_unit();
        const double u2 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

}  // namespace avs
