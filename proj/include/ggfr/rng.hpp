#pragma once

// Counter-based random numbers for shot sampling.
//
// Draw d of shot j under (seed, protocol hash p) is
//   mix64(key + gamma * (2 j + d + 1)),  key = mix64(seed ^ mix64(p + gamma)),
// where mix64 is the SplitMix64 finaliser and gamma = 0x9e3779b97f4a7c15.
// Every value depends only on its own coordinates, so shots can be produced
// in any order or on any worker and still reproduce bit for bit.

#include <cstdint>

namespace ggfr {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream + kGoldenGamma))) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ + kGoldenGamma * (counter + 1)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  double shot_uniform(std::uint64_t shot, std::uint64_t draw) const { return uniform(2 * shot + draw); }

 private:
  std::uint64_t key_;
};

/// FNV-1a, for stable content hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ggfr
