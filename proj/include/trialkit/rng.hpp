#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace trialkit {

namespace detail {

// splitmix64 finalizer. Good avalanche, trivially portable.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// FNV-1a, used to fold participant ids into seed material.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

/// Deterministic per-decision seed: one (participant, decision index) pair
/// always maps to the same seed, independent of call order.
constexpr std::uint64_t stable_seed(std::uint64_t trial_seed,
                                    std::string_view participant_id,
                                    std::uint64_t decision_index) noexcept {
    std::uint64_t h = detail::mix64(trial_seed);
    h = detail::mix64(h ^ detail::fnv1a(participant_id));
    h = detail::mix64(h ^ decision_index);
    return h;
}

/// Uniform double in [0, 1) from raw bits; 53 mantissa bits, bias-free.
constexpr double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small deterministic generator for simulation code. Hand-rolled (splitmix64
/// stream + Box-Muller) so logs are byte-identical across standard libraries;
/// std::*_distribution output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform() noexcept { return unit_double(next_u64()); }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    double normal(double mean = 0.0, double stddev = 1.0) noexcept {
        if (!have_spare_) {
            double u1 = uniform();
            double u2 = uniform();
            // Guard the log; uniform() can return exactly 0.
            while (u1 <= 0.0) u1 = uniform();
            double r = std::sqrt(-2.0 * std::log(u1));
            double a = 2.0 * std::numbers::pi * u2;
            spare_ = r * std::sin(a);
            have_spare_ = true;
            return mean + stddev * r * std::cos(a);
        }
        have_spare_ = false;
        return mean + stddev * spare_;
    }

    /// Index in [0, n) for category sampling.
    std::size_t index(std::size_t n) noexcept {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace trialkit
