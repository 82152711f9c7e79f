#pragma once

#include <cstdint>
#include <random>

namespace mspgd {

/// Independent named random streams derived from one user seed.
enum class Stream : std::uint32_t {
  kScreen = 1,
  kJitter = 2,
  kPerturbation = 3,
  kMetricNoise = 4,
  kAberration = 5,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  return make_rng(seed, static_cast<std::uint32_t>(stream));
}

}  // namespace mspgd
