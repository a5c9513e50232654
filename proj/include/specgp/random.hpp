#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace specgp {

// All stochastic components draw from a single mt19937_64 stream. The helpers
// below avoid std::uniform_*_distribution so that results are identical
// across standard-library implementations, not just across runs.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 bits of precision.
inline double rand_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be > 0.
inline std::size_t rand_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Uniform double in [lo, hi).
inline double rand_range(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rand_unit(rng);
}

/// Fisher-Yates shuffle on top of rand_index.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rand_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace specgp
