#pragma once

#include <cstdint>
#include <random>

namespace mpdiag {

using Rng = std::mt19937_64;

/// Counter-based sub-seed: splitmix64 finaliser applied to (master, stream).
/// Independent tasks draw from derive_seed(master, task_index).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
}

}  // namespace mpdiag
