#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace s2v {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the named substream `path` under `root`, e.g. {kSliceStream, 12}.
inline std::uint64_t substream_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632BE59BD9B4E019ULL));
  return s;
}

/// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform draw in [lo, hi); returns lo when the range is empty.
inline double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  const double r = lo + (hi - lo) * uniform01(rng);
  return r < hi ? r : std::nextafter(hi, lo);
}

/// Standard normal draw via Box-Muller; spelled out so streams do not depend on
/// the standard library's distribution implementation.
inline double normal(Rng& rng, double mean, double sigma) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace s2v
