#pragma once

#include <cmath>
#include <cstdint>

namespace hemix {

// Counter-based splitmix64 generator. State is (seed, counter), so the same
// seed always reproduces the same stream regardless of platform or stdlib.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() { return mix(seed_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    uint32_t uniform_int(uint32_t n) { return uint32_t(next_u64() % n); }

    // Standard normal via Box-Muller (implementation pinned here rather than
    // std::normal_distribution so streams are identical across stdlibs).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent stream derived from this generator's seed and a stream id;
    // used for per-sample generation so parallel workers stay deterministic.
    Rng fork(uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream))); }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hemix
