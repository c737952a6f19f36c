#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace apsel {

/// SplitMix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent generator for stream `stream` under base seed `seed`
/// (e.g. one stream per anneal read).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL)));
}

/// Uniform double in [0, 1) from the top 53 bits. Avoids the
/// implementation-defined std distributions so streams are portable.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection (bound > 0).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

/// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
inline double standard_normal(std::mt19937_64& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace apsel
