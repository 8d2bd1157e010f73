#pragma once

#include <array>
#include <cstdint>

namespace multimix {

/// xoshiro256** generator seeded through splitmix64.
///
/// Every sampling routine takes an `Rng&` explicitly; there is no global
/// generator. Two generators built from the same seed produce identical
/// streams on every platform, since all derived distributions are
/// implemented here rather than taken from <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1); never returns zero.
  double uniform_open() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, bound) without modulo bias. `bound` must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via the Marsaglia polar method.
  double normal() noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Independent child stream, deterministic in (seed, index).
  Rng split(std::uint64_t index) const noexcept { return Rng(derive_seed(seed_, index)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace multimix
