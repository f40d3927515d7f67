#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace entn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

using Rng = std::mt19937_64;

/// Seed of the named substream `name` derived from a global seed. Every
/// module draws from its own substream so adding draws in one module never
/// shifts another module's sequence.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name,
                                    std::uint64_t index = 0) {
    return detail::splitmix64(detail::splitmix64(seed ^ detail::fnv1a(name)) + index);
}

inline Rng make_rng(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    return Rng(substream_seed(seed, name, index));
}

/// Uniform double in [0, 1) built from the top 53 bits, so the sequence is
/// identical across standard library implementations.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace entn
