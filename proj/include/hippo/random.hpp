#pragma once

#include <cstdint>
#include <random>

namespace hippo {

/// SplitMix64 finalizer applied to x + golden gamma.
std::uint64_t mix64(std::uint64_t x);

/// Seed of substream `index` under `master`: mix64(mix64(master) + index * gamma).
/// Replicates and CV folds each own one substream, so results do not depend
/// on scheduling.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

/// std::mt19937_64 (bit-exact by the standard) with portable conversions:
/// uniforms from the top 53 bits, normals by the Marsaglia polar method.
/// The standard library distributions are avoided because their outputs are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hippo
