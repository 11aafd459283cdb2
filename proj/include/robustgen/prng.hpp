#pragma once

#include <cmath>
#include <cstdint>

namespace robustgen {

// SplitMix64: counter-based generator with a fixed, platform-independent
// output sequence for a given seed. All randomized code in this project
// draws from it so that a seed pins the entire stream.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in {0, ..., n-1} via rejection (unbiased).
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via the Marsaglia polar method; the spare value is
    // cached so consecutive calls consume a fixed pattern of uniforms.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    // Rademacher sign: +1 or -1 with equal probability.
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent stream id from a base seed, so that concurrent
// workers and repeated sub-tasks get disjoint deterministic streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    SplitMix64 mixer(base ^ (0x6A09E667F3BCC909ULL + stream * 0x9E3779B97F4A7C15ULL));
    return mixer.next_u64();
}

}  // namespace robustgen
