#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace cajscc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-component stream: the same (seed, label, counter) always yields
// the same sequence, independent of how many other streams were drawn.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t counter = 0) {
    return splitmix64(splitmix64(seed ^ fnv1a(label)) + counter);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view label, std::uint64_t counter = 0)
        : engine_(derive_seed(seed, label, counter)) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    // Circularly-symmetric complex Gaussian CN(0, variance).
    std::complex<double> complex_normal(double variance) {
        if (variance <= 0.0) return {0.0, 0.0};
        const double s = std::sqrt(variance / 2.0);
        const double re = normal(0.0, s);
        const double im = normal(0.0, s);
        return {re, im};
    }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace cajscc
