#pragma once

#include <cstdint>
#include <vector>

namespace hsdyn {

/// Deterministic random number generator (xoshiro256++ seeded via splitmix64).
///
/// The standard library distributions are implementation defined, which would
/// break the byte-for-byte reproducibility contract of the dataset generators,
/// so the few distributions we need are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape > 0.
  double gamma(double shape);

  /// Independent generator for a named substream.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hsdyn
