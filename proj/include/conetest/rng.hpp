#pragma once

#include <cstdint>

namespace conetest {

/// Counter-based pseudo-random generator.
///
/// Each (seed, stream) pair yields an independent sequence; the k-th output
/// is a pure function of (seed, stream, k), so simulation replicate i can be
/// handed stream i and the results do not depend on how replicates are
/// scheduled across threads.  Normal draws go through a fixed inverse-CDF
/// approximation rather than rejection sampling, so a (seed, stream) pair
/// consumes the same number of counter steps everywhere.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(mix(seed ^ mix(0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform draw strictly inside (0,1); safe to feed to an inverse CDF.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  /// Standard normal via the inverse-CDF map (no rejection, no ziggurat).
  double next_normal() noexcept { return normal_quantile(next_uniform()); }

  /// Uniform integer in [0, n) by 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
  static double normal_quantile(double p) noexcept;

 private:
  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace conetest
