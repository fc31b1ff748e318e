#pragma once

#include <cstdint>
#include <random>

namespace evit {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits; stable across standard libraries,
// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Normal(0, stddev) truncated to +-2 stddev by rejection (Box-Muller).
double truncated_normal(Rng& rng, double stddev);

// Derives an independent stream seed from a master seed and a tag.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace evit
