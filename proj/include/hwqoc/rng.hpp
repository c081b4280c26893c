#pragma once

// Deterministic RNG with labeled substreams. std::mt19937 + distributions are
// not byte-portable across standard libraries, and the reproducibility
// contract here is "same config + seed -> same output bytes on any platform",
// so draws are hand-rolled on top of splitmix64.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace hwqoc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Folds a label (and optional index) into a seed so that independently named
// substreams never overlap draw-for-draw.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the label bytes
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s) ^ h;
  mixed += 0x9E3779B97F4A7C15ull * (index + 1);
  std::uint64_t s2 = mixed;
  return splitmix64(s2);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
      : state_(derive_seed(seed, label, index)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // [0,1) with 53 bits of precision; identical bit pattern on any IEEE platform.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, two fresh uniforms per call (no cached spare: keeps the draw
  // count per call fixed, which substream accounting relies on).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Unbiased draw from {0, ..., n-1} by rejection.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - (~0ull % n + 1) % n;
    std::uint64_t v = next_u64();
    while (v > limit) v = next_u64();
    return v % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace hwqoc
