#pragma once

#include <cmath>
#include <cstdint>

namespace surmo {

// Deterministic 64-bit PRNG (splitmix64). Distributions are derived from the
// raw bits directly so that streams are reproducible independent of the
// standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed + 0x9E3779B97F4A7C15ULL) {}

    // Independent stream for (seed, index) pairs, e.g. one per training step.
    static Rng stream(uint64_t seed, uint64_t index) {
        Rng r(seed);
        r.state_ ^= 0xBF58476D1CE4E5B9ULL * (index + 1);
        r.next();
        return r;
    }

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t uniform_index(uint64_t n) { return next() % n; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t state_;
};

}  // namespace surmo
