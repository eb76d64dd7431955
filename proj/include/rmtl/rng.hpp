#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rmtl {

/// Seeded pseudorandom source. The engine is std::mt19937_64 (bit-exact across
/// platforms by the standard); all value mappings are implemented here instead
/// of via std::*_distribution, whose output is implementation-defined. Same
/// seed therefore gives the same draw sequence everywhere.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Lemire multiply-shift; slight bias is
    /// negligible for n far below 2^64 and the mapping is still deterministic.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (one value per pair of uniforms;
    /// no caching, so the consumption pattern stays obvious).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Derive an independent stream for a named purpose (data sampling vs
    /// dropout vs init) so consumers cannot desynchronize each other.
    SeededRng stream(std::uint64_t tag) const {
        // splitmix64 over seed^tag
        std::uint64_t z = seed_ ^ (tag * 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return SeededRng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace rmtl
