#pragma once

// Seeded random source with platform-independent sampling.
//
// std::uniform_real_distribution and friends are implementation-defined, so
// the conversions from raw 64-bit words are done here to keep generated
// instances bit-identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lossysync {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), rejection sampled (no modulo bias).
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Derives an independent stream for sub-task `k` of a seeded job.
    static std::uint64_t substream(std::uint64_t seed, std::uint64_t k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
        std::uint32_t out[2];
        seq.generate(out, out + 2);
        return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace lossysync
