#pragma once

// Differential triplets (b, a, K) of inhomogeneous Levy processes with
// piecewise-constant characteristics, and their characteristic velocity.

#include <Eigen/Dense>
#include <vector>

#include "levy_sigkernel/tensor_algebra.hpp"

namespace levy_sigkernel {

struct Atom {
  double weight = 0.0;  // jump intensity lambda_i >= 0
  TruncatedTensor x;    // jump, zero scalar part, depth = state depth
};

enum class JumpKind { None, Atomic, GaussianCP };

struct JumpSpec {
  JumpKind kind = JumpKind::None;
  std::vector<Atom> atoms;    // Atomic
  double intensity = 0.0;     // GaussianCP
  Eigen::MatrixXd covariance; // GaussianCP, d x d, centered law on V
};

struct TripletInterval {
  /// Drift b: zero scalar part, depth = state depth. For state depth 2 the
  /// level-2 part is the area drift and must be antisymmetric.
  TruncatedTensor drift;
  /// Diffusion on the V (x) V block, symmetric PSD d x d.
  Eigen::MatrixXd diffusion;
  JumpSpec jumps;
};

struct LevyTriplet {
  int dim = 1;
  int state_depth = 1;                 // 1 or 2
  std::vector<double> time_grid;       // 0 = t_0 < ... < t_m = T
  std::vector<TripletInterval> intervals;

  double horizon() const { return time_grid.back(); }
  /// Throws InvalidTriplet describing the first violated invariant.
  void validate() const;
};

/// Piecewise-constant velocity: values[i] holds on [time_grid[i], time_grid[i+1]].
struct PiecewiseVelocity {
  int dim = 1;
  int depth = 0;
  std::vector<double> time_grid;
  std::vector<TruncatedTensor> values;

  double horizon() const { return time_grid.back(); }
  void validate() const;
};

/// a = sum_k sigma_k sigma_k^T.
Eigen::MatrixXd covariance_from_factors(const std::vector<Eigen::VectorXd>& factors);

/// Triplet with zero characteristics on [0, T].
LevyTriplet zero_triplet(int dim, double horizon, int state_depth = 1);
/// Brownian motion with constant covariance on [0, T].
LevyTriplet brownian_triplet(const Eigen::MatrixXd& covariance, double horizon);
/// Deterministic path with piecewise-constant derivative (drift only).
LevyTriplet deterministic_triplet(int dim, int state_depth, std::vector<double> time_grid,
                                  std::vector<TruncatedTensor> drifts);

/// Level-2 tensor with coefficient m(i,j) at word (i+1)(j+1).
TruncatedTensor level2_tensor(const Eigen::MatrixXd& m, int depth);
/// E[xi^(x)n] for xi ~ N(0, cov) as a level-n array (zero for odd n).
std::vector<double> gaussian_moment_level(const Eigen::MatrixXd& cov, int n);

/// b + a/2 + jump term per interval, truncated at depth M.
PiecewiseVelocity characteristic_velocity(const LevyTriplet& triplet, int depth);

/// Integral over [0, T] of the large-jump exponential moment at scale lambda.
double exponential_moment_value(const LevyTriplet& triplet, double lambda, double horizon);

/// Characteristics of delta_lambda applied to the process.
LevyTriplet dilate_triplet(const LevyTriplet& triplet, double lambda);

PiecewiseVelocity truncate(const PiecewiseVelocity& v, int depth);
PiecewiseVelocity dilate(const PiecewiseVelocity& v, double lambda);
PiecewiseVelocity constant_velocity(const TruncatedTensor& x, double horizon);

/// Index of the interval containing [a, b]; throws OutOfRange if none.
std::size_t interval_index(const std::vector<double>& grid, double a, double b);

}  // namespace levy_sigkernel
