#pragma once

#include <cstdint>

namespace bow {

// SplitMix64 generator. Chosen over <random> engines so that streams are
// bit-identical across platforms and standard library versions; every
// sampled artifact in the project must reproduce byte-for-byte from a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0. Uses rejection to stay unbiased.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream from a root seed and up to three indices
// (worker, context, member...). Mixing through SplitMix64 steps keeps
// nearby indices decorrelated, and the derivation is scheduling-independent.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
    Rng mixer(seed);
    std::uint64_t s = mixer.next_u64();
    s ^= Rng(a + 0x7c15ULL).next_u64();
    s = Rng(s).next_u64();
    s ^= Rng(b + 0x9e37ULL).next_u64();
    s = Rng(s).next_u64();
    s ^= Rng(c + 0x85ebULL).next_u64();
    return Rng(s);
}

}  // namespace bow
