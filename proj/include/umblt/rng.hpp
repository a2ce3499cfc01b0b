#pragma once

#include <cstdint>
#include <random>

namespace umblt {

/// splitmix64 mix step; used to derive independent seeds for sub-streams.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic per-(source, noise-level) stream seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 1));
}

/// Uniform draw in [-1, 1) built from the top 53 bits of the generator
/// output; avoids std::uniform_real_distribution so that byte-identical
/// streams do not depend on the standard library implementation.
inline double uniform_pm1(std::mt19937_64& rng) {
    const double u = (rng() >> 11) * 0x1.0p-53; // [0, 1)
    return 2.0 * u - 1.0;
}

} // namespace umblt
