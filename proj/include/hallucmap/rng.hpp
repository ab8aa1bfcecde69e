#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace hallucmap {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31U);
}

/// Derives a stream key from a parent key and a stream identifier.
constexpr std::uint64_t combine_keys(std::uint64_t key, std::uint64_t stream) {
  return mix64(key ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
}

/// Counter-based generator: draw i of a stream depends only on (key, i), so
/// streams can be split per point or per epoch without sharing state.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type at(std::uint64_t index) const {
    return mix64(key_ + (index + 1) * 0x9e3779b97f4a7c15ULL);
  }
  constexpr result_type operator()() { return at(counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    // Multiply-shift range reduction; bias is below 2^-64 * n.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64U);
  }

  /// Standard normal via Box-Muller (one value per two uniforms).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace hallucmap
