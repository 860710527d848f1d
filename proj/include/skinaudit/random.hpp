#pragma once

// Seeded randomness with portable, platform-independent draws. std distributions are
// implementation-defined, so the few draws needed here are done by hand on top of mt19937_64.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace skinaudit::rng {

using Engine = std::mt19937_64;
inline constexpr const char* kEngineName = "mt19937_64";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent engine for (seed, stream); the mapping is fixed so parallel and serial
// consumers draw identical values.
inline Engine substream(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

// Uniform integer in [0, n), rejection sampling (no modulo bias).
inline std::uint64_t uniform_index(Engine& e, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = e();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1).
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

inline double uniform(Engine& e, double lo, double hi) { return lo + (hi - lo) * uniform01(e); }

// Standard normal via Box-Muller (one value per call).
inline double normal(Engine& e) {
  double u1;
  do {
    u1 = uniform01(e);
  } while (u1 <= 0.0);
  const double u2 = uniform01(e);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double normal(Engine& e, double mean, double sd) { return mean + sd * normal(e); }

// Fisher-Yates.
template <typename T>
void shuffle(Engine& e, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(e, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace skinaudit::rng
