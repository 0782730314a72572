// Seeded random number utilities. Everything that consumes randomness in
// this project goes through Rng so runs are reproducible from a single
// 64-bit seed, with substreams derived per channel / per selection.
#pragma once

#include <cstdint>
#include <random>

namespace hbci {

/// One step of the splitmix64 generator; advances state and returns the
/// next output. Used both as a generator and as a seed mixer.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic substream seed for (base, stream). Distinct streams give
/// statistically independent generators.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// mt19937_64 wrapped with explicit, portable output transforms
/// (53-bit uniform doubles, rejection-sampled bounded integers,
/// Box-Muller gaussians) so sequences do not depend on the standard
/// library's unspecified distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform01();

  /// Unbiased uniform integer in [0, n). n must be nonzero.
  std::uint64_t bounded(std::uint64_t n);

  /// Standard normal deviate (Box-Muller, pairs cached).
  double gauss();

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hbci
