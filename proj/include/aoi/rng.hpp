#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace aoi {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based 64-bit generator: the i-th output is a pure function of
/// (key, i), so any stream position can be reproduced without replaying the
/// stream. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix64(seed + stream * kGoldenGamma) | 1ULL) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }
  constexpr void discard(std::uint64_t n) noexcept { counter_ += n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform on [0, 1) with 53 random bits.
template <typename Rng>
double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Exp(rate) by inversion; -log1p(-u) is finite for u in [0, 1).
template <typename Rng>
double exponential_variate(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace aoi
