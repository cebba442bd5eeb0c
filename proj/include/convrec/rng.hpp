#pragma once

#include <cstdint>

namespace convrec {

// SplitMix64 stream. Hand-rolled instead of <random> because
// uniform_int_distribution's algorithm is implementation-defined, and every
// published dataset must be regenerable bit-for-bit from its seed on any
// platform.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). n must be > 0. Modulo bias is negligible for the
    // small n used here and keeps the stream layout trivial to reason about.
    uint64_t bounded(uint64_t n) { return next() % n; }

    bool coin() { return (next() & 1ull) != 0; }
};

}  // namespace convrec
