#pragma once

#include <cmath>
#include <cstdint>

namespace tvulog {

// Counter-based generator: word i of stream `seed` is the SplitMix64
// finalizer applied to seed + (i+1)*odd constant.  Any word is addressable
// in O(1), so sampling order never affects reproducibility.
struct CounterRng {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit CounterRng(std::uint64_t s) : seed(s) {}

    static std::uint64_t word(std::uint64_t seed, std::uint64_t i) {
        std::uint64_t x = seed + (i + 1) * 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t next_u64() { return word(seed, counter++); }

    // Uniform on (0, 1]: never 0, so it is safe under log().
    double next_uniform() {
        return double((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two words per draw.
    double next_normal() {
        double u1 = next_uniform();
        double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

}  // namespace tvulog
