#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sobolev {

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent substream seed for a named consumer of the run seed.
inline std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view label) {
    return splitmix64(run_seed ^ fnv1a(label));
}

using Rng = std::mt19937_64;

/// Uniform double in [lo, hi) built from raw engine output, so results do not
/// depend on the standard library's distribution implementations.
inline double uniform(Rng& rng, double lo, double hi) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

}  // namespace sobolev
