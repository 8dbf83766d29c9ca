#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace palletrack::rng {

// Counter-based generator: every draw is a pure function of (key, counter), so
// results do not depend on evaluation order. Standard distributions are avoided
// because their algorithms differ between standard libraries.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t key, std::uint64_t counter) {
    return splitmix64(splitmix64(key) ^ (counter * 0xD1B54A32D192ED03ull));
}

/// Uniform in [0, 1) with 53 bits.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller from two counter draws.
inline double normal(std::uint64_t key, std::uint64_t counter) {
    const double u1 = 1.0 - uniform01(mix(key, 2 * counter));  // (0, 1]
    const double u2 = uniform01(mix(key, 2 * counter + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential stream for callers that want a plain generator.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}
    std::uint64_t next() { return mix(key_, counter_++); }
    double uniform() { return uniform01(next()); }
    double normal() { return rng::normal(key_ ^ 0x5DEECE66Dull, counter_++); }
    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % bound;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace palletrack::rng
