#pragma once

#include <cmath>
#include <cstdint>

namespace nlrd {

/// SplitMix64: tiny, seedable, reproducible across platforms. Used for
/// perturbation vectors and per-cell sweep seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1).
    double uniform() {
        return (next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (deterministic, platform independent).
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
};

/// Derive a stream seed for worker `index` from a master seed; stable
/// regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 mix(master ^ (0xA0761D6478BD642FULL + index * 0xE7037ED1A0B428DBULL));
    return mix.next();
}

} // namespace nlrd
