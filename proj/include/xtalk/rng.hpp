#pragma once

#include <cstdint>

namespace xtalk {

/// Deterministic counter-free PRNG (splitmix64). Every parallel work item
/// derives its own stream from (seed, stream index), so campaign results do
/// not depend on thread scheduling. No hidden global state anywhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {
        // Decorrelate trivially related seeds before first use.
        next_u64();
        next_u64();
    }

    /// Child stream for work item `index` under a labelled domain.
    /// Distinct (domain, index) pairs give independent streams.
    static RngStream child(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
        std::uint64_t s = seed;
        s = mix(s ^ (0x9E3779B97F4A7C15ULL * (domain + 1)));
        s = mix(s ^ (0xBF58476D1CE4E5B9ULL * (index + 1)));
        return RngStream(s);
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Modulo bias is < 2^-53 for the n used here (n <= a few thousand).
        return next_u64() % n;
    }

    /// Number of successes in `shots` Bernoulli(p) trials.
    int binomial(int shots, double p) {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return shots;
        int k = 0;
        for (int i = 0; i < shots; ++i)
            if (uniform() < p) ++k;
        return k;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace xtalk
