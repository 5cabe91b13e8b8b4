#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string_view>

namespace panelsmc {

// splitmix64 step; used to fold stream keys into a seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a 64 of a string; unit streams are keyed by the unit's NAME so that
// per-unit results do not change when units are reordered or subsetted.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

// Derives a child seed from a root seed and a list of stream keys.
// Stochastic operations key their streams by (seed, tag, indices...) so that
// results do not depend on thread count or execution order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Fixed tags keeping the streams of different operations disjoint.
namespace rng_tag {
inline constexpr std::uint64_t simulate = 0x51;
inline constexpr std::uint64_t pfilter = 0x50;
inline constexpr std::uint64_t pif = 0x49;
inline constexpr std::uint64_t refine = 0x52;
inline constexpr std::uint64_t design = 0x44;
}  // namespace rng_tag

// One pseudo-random stream. mt19937_64 output is pinned by the standard and
// the variate recipes below avoid the implementation-defined std
// distributions, so a given (seed, keys) pair yields the same draws on every
// platform this code compiles on.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : engine_(derive_seed(seed, keys)) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform on [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal, Box-Muller (cosine branch only, so one draw per call
  // and no hidden cache state)
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace panelsmc
