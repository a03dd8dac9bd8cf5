#pragma once

#include <array>
#include <cstdint>

namespace steep {

/// Deterministic random stream identified by (seed, stream id).
///
/// The generator is xoshiro256** seeded through SplitMix64 from a hash of the
/// seed and the stream id, so every (seed, stream) pair yields the same
/// sequence on every platform. Distributions are implemented here rather than
/// taken from <random>, whose distribution algorithms are unspecified and differ
/// between standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64 v1";

  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1); safe to take the log of.
  double uniform_pos();
  /// Unbiased integer in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double cauchy();
  /// Number of failures before the first success, success probability p.
  std::uint64_t geometric(double p);

  /// Derives an independent child stream (used for the per-chain sub-streams).
  Rng split(std::uint64_t child) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> s_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// The two streams owned by one chain: one decides which kernel fires, the
/// other drives the kernel itself. Keeping them apart makes a Small-World chain
/// with a vanishing long-range probability replay the pure local chain exactly.
struct ChainRng {
  ChainRng(std::uint64_t seed, std::uint64_t chain)
      : choice(Rng(seed, chain).split(0)), move(Rng(seed, chain).split(1)) {}

  Rng choice;
  Rng move;
};

}  // namespace steep
