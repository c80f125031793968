#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace srhc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive well-spread stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-derived seed: the same (base, keys...) always yields the same seed,
// independent of how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  return Rng(derive_seed(base, keys));
}

}  // namespace srhc

namespace srhc {

// Radical inverse of `index` in the given prime base (Halton coordinate).
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// Halton point in [0,1)^dim; index starts at 1 so no coordinate is zero.
inline double halton(std::uint64_t index, unsigned coordinate) {
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  return radical_inverse(index, primes[coordinate % 12]);
}

}  // namespace srhc
