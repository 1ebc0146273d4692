#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "stormbench/vec.hpp"

namespace stormbench {

// Fixed-increment splittable generator (Steele/Lea/Flood; Vigna's fixed-gamma
// variant). 64 bits of state, passes BigCrush, trivially seedable: exactly
// what a reproducible experiment runner needs.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  constexpr result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// SplitMix finalizer as a standalone bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Child seed from (seed, a, b). The odd multiplier between absorptions keeps
// the arguments order-sensitive, so (rep, grid) and (grid, rep) land in
// distinct streams.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) {
  constexpr std::uint64_t kOdd = 0xD1342543DE82EF95ull;
  std::uint64_t h = mix64(seed);
  h = mix64(h * kOdd ^ mix64(a));
  h = mix64(h * kOdd ^ mix64(b));
  return h;
}

// Uniform double in [0, 1): top 53 bits of one draw.
inline double uniform01(SplitMix64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(SplitMix64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

// Unbiased uniform index in [0, n): rejection below the largest multiple
// of n. Consumes a deterministic draw sequence for a given stream.
inline std::uint64_t uniform_index(SplitMix64& gen, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % n;
  }
}

// Box-Muller pairs: every call consumes exactly two raw draws, which keeps
// stream accounting independent of the values produced.
inline void fill_normal(SplitMix64& gen, Vec& out) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const double u1 = static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = uniform01(gen);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(two_pi * u2);
    if (i + 1 < out.size()) out[i + 1] = r * std::sin(two_pi * u2);
  }
}

// A seeded generator plus the draw counter that token handles record.
struct RngStream {
  explicit RngStream(std::uint64_t seed) : gen(seed) {}
  SplitMix64 gen;
  std::uint64_t draws = 0;
};

}  // namespace stormbench
