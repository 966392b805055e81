#pragma once

#include <cstdint>
#include <random>

namespace ctbn {

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Generator for substream `stream` of `master`. Distinct (master, stream)
/// pairs give statistically independent streams.
inline Rng substream(std::uint64_t master, std::uint64_t stream) {
  return Rng(mix64(mix64(master) ^ mix64(stream + 0x5851f42d4c957f2dULL)));
}

}  // namespace ctbn
