#pragma once

#include <cstdint>
#include <random>

namespace ndsid {

/// SplitMix64 finalizer; used to derive independent stream seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of sub-stream `stream` under `master`. Distinct (master, stream) pairs give
/// statistically independent engines; the mapping is stable across runs and platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
}

// Stream tags, kept apart so schedule, noise and parameter draws never share a stream.
inline constexpr std::uint64_t kScheduleStream = 0x1000;
inline constexpr std::uint64_t kNoiseStream = 0x2000;
inline constexpr std::uint64_t kChainStream = 0x3000;
inline constexpr std::uint64_t kInitStream = 0x4000;
inline constexpr std::uint64_t kTrialStream = 0x5000;

}  // namespace ndsid
