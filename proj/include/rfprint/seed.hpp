#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rfprint {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based seed derivation: the result depends only on the ordered
/// key list, never on call order or thread schedule.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (auto k : keys) h = mix64(h ^ mix64(k));
    return h;
}

/// Stream tags used when one seed feeds several independent generators.
enum class Stream : std::uint64_t {
    Bits = 1,
    Noise = 2,
    PhaseNoise = 3,
    Split = 4,
    Shuffle = 5,
    Init = 6,
    Dropout = 7,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    return Rng(derive_seed({seed, static_cast<std::uint64_t>(stream)}));
}

}  // namespace rfprint
