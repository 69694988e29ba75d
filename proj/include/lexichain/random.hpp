#pragma once

#include <cstdint>
#include <random>

namespace lexichain {

// std::mt19937_64 output is fully specified by the standard, unlike the
// standard distributions, so everything below derives values from the raw
// engine output to stay reproducible across platforms.

/// Uniform integer in [0, bound) by rejection sampling.
inline uint64_t uniform_index(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace lexichain
