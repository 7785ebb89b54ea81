#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cusppinn {

/// Deterministic random stream. Wraps mt19937_64 but generates uniforms and
/// gaussians from raw 64-bit draws so sequences are identical across standard
/// library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n), n >= 1.
    uint64_t below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller on our own uniforms.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<uint32_t> permutation(uint32_t n) {
        std::vector<uint32_t> p(n);
        for (uint32_t i = 0; i < n; ++i) p[i] = i;
        for (uint32_t i = n; i > 1; --i) {
            const uint32_t j = static_cast<uint32_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

/// Derives an independent child seed from a base seed and up to two stream tags.
inline uint64_t derive_seed(uint64_t base, uint64_t tag_a, uint64_t tag_b = 0) {
    uint64_t h = detail::splitmix64(base);
    h = detail::splitmix64(h ^ (0x517cc1b727220a95ULL + tag_a));
    h = detail::splitmix64(h ^ (0x2545f4914f6cdd1dULL + tag_b));
    return h;
}

/// Stream tags used when one logical seed fans out into several samplers.
enum SeedStream : uint64_t {
    kSeedInterior = 1,
    kSeedInterface = 2,
    kSeedBoundary = 3,
    kSeedInit = 4,
    kSeedTest = 5,
    kSeedJumpFitPoints = 6,
    kSeedJumpFitInit = 7,
};

} // namespace cusppinn
