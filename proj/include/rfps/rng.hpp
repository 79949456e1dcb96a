#pragma once

#include "rfps/types.hpp"

#include <cstdint>
#include <limits>
#include <random>

namespace rfps {

// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Key of an independent stream identified by (seed, a, b). Streams are
// addressed by index rather than drawn sequentially, so results do not depend
// on the order in which tasks run.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ (a + 0x632BE59BD9B4E019ULL)) ^ (b + 0x8CB92BA72F3D8DD7ULL));
}

// Counter-based generator: the i-th output is mix64(key + i * golden).
// Satisfies UniformRandomBitGenerator so std distributions can consume it.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept
      : key_(stream_key(seed, a, b)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

  std::uint64_t counter() const noexcept { return counter_; }

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  Index uniform_index(Index n) noexcept {
    return static_cast<Index>(uniform() * static_cast<double>(n));
  }

  double normal() { return normal_(*this); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

// k distinct indices drawn uniformly from {0..n-1}, returned sorted.
IndexSet sample_indices(CounterRng& rng, Index n, Index k);

// Matrix of iid standard normal draws, filled column by column.
Matrix normal_matrix(CounterRng& rng, Index rows, Index cols);

}  // namespace rfps
