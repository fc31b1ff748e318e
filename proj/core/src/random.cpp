#include "evit/random.hpp"

#include <cmath>
#include <numbers>

namespace evit {

double truncated_normal(Rng& rng, double stddev) {
  for (;;) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    if (std::abs(z) <= 2.0) return z * stddev;
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace evit
