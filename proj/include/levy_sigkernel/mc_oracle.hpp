#pragma once

// Monte Carlo ground truth: simulated Lévy paths, their truncated
// signatures under the Marcus rule, and sample means with standard errors.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/tensor_algebra.hpp"

namespace levy_sigkernel {

/// Philox4x32-10 counter-based generator. Satisfies UniformRandomBitGenerator.
/// Counter word 0 is the block index inside a stream; words 1..3 and the key
/// select the stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(Key key, Block counter) : key_(key), counter_(counter) {}
  /// Stream for (seed, path, interval, stream id).
  static Philox4x32 stream(std::uint64_t seed, std::uint64_t path, std::uint32_t interval,
                           std::uint32_t id = 0);

  static Block block(Block counter, Key key);

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int used_ = 4;
};

struct SimulationOptions {
  int steps_per_interval = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Selects an independent family of streams for the same seed.
  std::uint32_t stream_id = 0;
};

using PathIncrements = std::vector<TruncatedTensor>;  // Lie-valued, state depth

/// Increments of path `index`: exact Gaussian sub-steps on the continuous
/// part, split at jump times drawn from exponential inter-arrivals.
PathIncrements simulate_path(const LevyTriplet& triplet, std::uint64_t index,
                             const SimulationOptions& options);
std::vector<PathIncrements> simulate_paths(const LevyTriplet& triplet, std::size_t n_paths,
                                           const SimulationOptions& options);

/// Ordered product of exp(increment).
TruncatedTensor path_signature(const PathIncrements& increments, int depth);

struct SignatureEstimate {
  TruncatedTensor mean;
  TruncatedTensor se;  // per coefficient
  LevelNorms level_se;
  std::size_t n_paths = 0;
};

/// Sample mean of Sig(X)_{0,t}; chunk sums are combined by a fixed binary
/// tree, so the result does not depend on the thread count.
SignatureEstimate estimate_expected_signature(const LevyTriplet& triplet, double t, int depth,
                                              std::size_t n_paths,
                                              const SimulationOptions& options);

struct KernelEstimate {
  double value = 0.0;
  double se = 0.0;
};

/// <mean Sig(X), mean Sig(Y)> with independent path families, and its
/// delta-method standard error from a second pass over the same paths.
KernelEstimate estimate_kernel(const LevyTriplet& a, const LevyTriplet& b, double t, int depth,
                               std::size_t n_paths, const SimulationOptions& options);

/// Columns word,mean,se; words are letters joined by '.', the empty word is blank.
void write_signature_csv(std::ostream& out, const SignatureEstimate& estimate);

}  // namespace levy_sigkernel
