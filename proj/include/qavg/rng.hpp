#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qavg {

/// Seeded 64-bit generator with named substreams.
///
/// A stream is identified by the key (seed, label). The label is hashed with
/// 64-bit FNV-1a, combined with the seed, and expanded through SplitMix64 into
/// the 256-bit state of a xoshiro256** generator. Two streams with different
/// labels under the same seed are statistically independent for all practical
/// purposes, so stages can draw concurrently without sharing state, and adding
/// draws to one stage never shifts the draws of another.
///
/// The sequence for a given key is fixed across platforms and compilers: no
/// <random> distribution objects are involved.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal variate by inverse-CDF transform of uniform().
  double normal();

  /// Gamma(shape, scale=1) variate, shape > 0.
  double gamma(double shape);

  /// Derives a child seed, used to give each repetition its own key space.
  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace qavg
