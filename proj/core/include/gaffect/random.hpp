#pragma once

#include <cstdint>

namespace gaffect {

/// Counter-based generator built on the SplitMix64 finalizer.
///
/// Output number i (1-based) of a stream is `mix(key + i * 0x9E3779B97F4A7C15)`,
/// where `mix` is the SplitMix64 output function. The key of stream `s` under
/// seed `seed` is `mix(seed ^ mix(s + 0x9E3779B97F4A7C15))`. Every output is a
/// pure function of (seed, stream, counter), so results do not depend on the
/// platform, the standard library or thread scheduling.
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + kGamma))) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

  /// Uniform integer in [0, bound) by rejection of the biased low range.
  std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate (Box-Muller, one value per two draws).
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gaffect
