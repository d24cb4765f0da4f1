#pragma once

#include <cstdint>
#include <random>

namespace pivotal::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the i-th independent stream derived from `seed`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t i) {
  return splitmix64(seed + i * 0x9E3779B97F4A7C15ULL);
}

/// Uniform on [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace pivotal::detail
