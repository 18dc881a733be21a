#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cellsynth {

using Rng = std::mt19937_64;

/// Tags for the independent random streams of a simulation. Every stream is
/// derived from (global seed, tag, keys...) so results do not depend on the
/// order in which work is scheduled.
enum class StreamTag : std::uint64_t {
    stage = 1,
    shape = 2,
    motion = 3,
    intensity = 4,
    texture = 5,
    placement = 6,
    acquisition = 7,
    repulsion = 8,
    lineage = 9,
    corpus = 10,
    noise_row = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Hash (seed, tag, keys) into a 64-bit stream seed.
std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {});

Rng substream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {});

}  // namespace cellsynth
