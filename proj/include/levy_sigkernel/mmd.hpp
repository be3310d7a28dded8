#pragma once

// Signature MMD between an empirical measure of area-augmented paths and an
// inhomogeneous Wiener measure, from three families of Goursat solves.

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/kernel_solver.hpp"

namespace levy_sigkernel {

struct AugmentedPath {
  std::vector<Eigen::VectorXd> b;     // per-interval derivative in V
  std::vector<Eigen::MatrixXd> area;  // per-interval area derivative, antisymmetric
};

struct AugmentedPathEnsemble {
  int dim = 1;
  std::vector<double> time_grid;  // shared by all paths
  std::vector<AugmentedPath> paths;

  double horizon() const { return time_grid.back(); }
  void validate() const;
};

struct WienerSpec {
  int dim = 1;
  std::vector<double> time_grid;
  std::vector<Eigen::MatrixXd> covariance;  // a(t) per interval

  double horizon() const { return time_grid.back(); }
  void validate() const;
};

struct MmdOptions {
  SolveOptions solve;
  int threads = 1;
};

struct PairValue {
  std::size_t j = 0, k = 0;
  double value = 0.0;
};

struct MmdReport {
  double u_alpha = 0.0;
  std::vector<double> v;     // v_k(T, T)
  std::vector<PairValue> w;  // w_jk(T, T), j <= k, sorted
  double radicand = 0.0;     // before clipping
  bool clipped = false;
  double mmd2 = 0.0;
  double mmd = 0.0;
  /// Largest |surface| / psi over every node of every solve.
  double apriori_ratio = 0.0;
};

/// Deterministic triplet (b_k + area_k, 0, none) of path k.
LevyTriplet path_triplet(const AugmentedPathEnsemble& ensemble, std::size_t k);
/// Continuous triplet (0, a, none).
LevyTriplet wiener_triplet(const WienerSpec& wiener);

/// Uniform grid of `steps` cells refined by every breakpoint of both inputs.
std::vector<double> mmd_grid(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                             int steps);

KernelSurface wiener_kernel(const WienerSpec& wiener, const std::vector<double>& grid,
                            const SolveOptions& options = {});
KernelSurface cross_kernel(const AugmentedPathEnsemble& ensemble, std::size_t k,
                           const WienerSpec& wiener, const std::vector<double>& grid,
                           const SolveOptions& options = {});
KernelSurface pair_kernel(const AugmentedPathEnsemble& ensemble, std::size_t j, std::size_t k,
                          const std::vector<double>& grid, const SolveOptions& options = {});

MmdReport mmd_to_wiener(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                        const std::vector<double>& grid, const MmdOptions& options = {});

/// |(1/M) sum_k Sig(gamma_k) - E Sig(W)|^2 summed over words up to `depth`.
double mmd2_by_development(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                           int depth);

/// Rows kind,j,k,value: u, v, w per solve, then mmd and mmd2.
void write_mmd_csv(std::ostream& out, const MmdReport& report);

}  // namespace levy_sigkernel
