#pragma once

#include <cstdint>
#include <random>

namespace mctf {

/// Seeded generator with hand-scaled outputs. distribution<> adapters are
/// implementation-defined, so draws are derived from raw mt19937 words to keep
/// traces reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint32_t seed) : gen_(seed) {}

    std::uint32_t next_u32() { return gen_(); }

    /// Uniform float in [lo, hi), 24 bits of resolution.
    float uniform(float lo, float hi) {
        const float u = static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
        return lo + (hi - lo) * u;
    }

    /// Uniform integer in [0, bound). bound must be >= 1. Rejection sampled,
    /// so there is no modulo bias.
    int uniform_int(int bound) {
        const std::uint32_t b = static_cast<std::uint32_t>(bound);
        const std::uint32_t limit = UINT32_MAX - UINT32_MAX % b;
        std::uint32_t x;
        do {
            x = next_u32();
        } while (x >= limit);
        return static_cast<int>(x % b);
    }

private:
    std::mt19937 gen_;
};

}  // namespace mctf
