#pragma once

#include <cstdint>
#include <random>

namespace bfcheck {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for (master_seed, counter, tag). The stream depends
/// only on its coordinates, never on the order in which streams are created.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t counter,
                         std::uint64_t tag = 0) {
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
  s = splitmix64(s ^ splitmix64(tag + 0x8CB92BA72F3D8DD7ULL));
  return Rng(s);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Uniform integer on {lo, ..., hi}.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace bfcheck
