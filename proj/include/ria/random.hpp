#pragma once

#include <cstdint>

namespace ria {

/// Stateless counter-based generator: output i is splitmix64(seed, i).
/// Any draw can be recomputed from (seed, counter) alone, which keeps seeded
/// artifacts reproducible across platforms and standard libraries.
///
/// Versioned: changing the mixing function or the normal transform must bump
/// kVersion, since projection bases and synthetic scenes depend on it.
class CounterRng {
 public:
  static constexpr int kVersion = 1;

  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t counter);

  std::uint64_t next_u64() { return mix(seed_, counter_++); }

  /// Uniform in the open interval (0, 1).
  double uniform();

  /// Standard normal via Box-Muller; consumes two counters per draw.
  double normal();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace ria
