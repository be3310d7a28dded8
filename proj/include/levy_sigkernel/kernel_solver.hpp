#pragma once

// Goursat PDE-ODE solvers for expected signature kernels.
//
// Every solver runs the same lexicographic sweep over grid cells: a Heun
// predictor-corrector for w (2D trapezoid) and for the two ODE components
// (1D trapezoid), second order when the grids contain every breakpoint of
// the piecewise-constant coefficients.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/tensor_algebra.hpp"

namespace levy_sigkernel {

struct SolveOptions {
  /// Solve again on the grid with midpoints inserted and combine
  /// (4 fine - coarse) / 3 at the coarse nodes.
  bool richardson = false;
};

struct KernelSurface {
  std::vector<double> s_grid, t_grid;
  int dim = 1;
  int M = 0, N = 0;
  int f_depth = -1;  // -1 when the solve carries no f component
  int g_depth = -1;  // depth of f~
  int scheme_order = 2;
  bool richardson = false;
  std::optional<double> certificate;
  /// Cumulative 1-variation masses C_s, C~_t at the grid nodes, used for
  /// the a priori bound |w(s,t)| <= psi(C_s, C~_t).
  std::vector<double> mass_s, mass_t;

  std::vector<double> w;       // w[p * n_t + q]
  std::vector<double> f_data;  // node-major, f_size() values per node
  std::vector<double> g_data;

  std::size_t n_s() const { return s_grid.size(); }
  std::size_t n_t() const { return t_grid.size(); }
  std::size_t f_size() const;
  std::size_t g_size() const;

  double w_at(std::size_t p, std::size_t q) const { return w[p * n_t() + q]; }
  double value() const { return w.back(); }
  TruncatedTensor f_at(std::size_t p, std::size_t q) const;
  TruncatedTensor g_at(std::size_t p, std::size_t q) const;

  /// Transposed surface (roles of s and t, f and f~ exchanged).
  KernelSurface transposed() const;
  /// max over nodes of |w| / psi(C_s, C~_t); <= 1 when the bound holds.
  double apriori_ratio() const;
};

/// Uniform grid of `steps` intervals on [0, T] merged with the breakpoints
/// that fall inside (0, T).
std::vector<double> make_grid(double horizon, int steps,
                              const std::vector<double>& breakpoints = {});

KernelSurface solve_truncated_system(const PiecewiseVelocity& v, const PiecewiseVelocity& vt,
                                     int M, int N, const std::vector<double>& s_grid,
                                     const std::vector<double>& t_grid,
                                     const SolveOptions& options = {});

/// Second-level system for continuous triplets with state depth <= 2;
/// f and f~ are stored as depth-1 tensors with zero scalar part.
KernelSurface solve_level2_system(const LevyTriplet& triplet, const LevyTriplet& triplet_t,
                                  const std::vector<double>& s_grid,
                                  const std::vector<double>& t_grid,
                                  const SolveOptions& options = {});

/// u_st = alpha u with alpha sampled at the grid nodes (n_s x n_t).
KernelSurface solve_goursat_scalar(const Eigen::MatrixXd& alpha_nodes,
                                   const std::vector<double>& s_grid,
                                   const std::vector<double>& t_grid,
                                   const SolveOptions& options = {});
/// Separable alpha(s, t) = f(s) g(t).
KernelSurface solve_goursat_scalar(const std::function<double(double)>& f,
                                   const std::function<double(double)>& g,
                                   const std::vector<double>& s_grid,
                                   const std::vector<double>& t_grid,
                                   const SolveOptions& options = {});
/// alpha constant on each grid cell ((n_s - 1) x (n_t - 1)).
KernelSurface solve_goursat_scalar_cells(const Eigen::MatrixXd& alpha_cells,
                                         const std::vector<double>& s_grid,
                                         const std::vector<double>& t_grid,
                                         const SolveOptions& options = {});

/// C_s C~_t (int_0^s |y - pi_(0,M) y|_1 + int_0^t |y~ - pi_(0,N) y~|_1).
double truncation_certificate(const PiecewiseVelocity& v, const PiecewiseVelocity& vt, int M,
                              int N, double s, double t);

double bessel_i0(double z);
/// e^(x+y) I_0(2 sqrt(xy)).
double apriori_psi(double x, double y);

/// Interval index of each grid cell; throws GridMismatch if the grid skips
/// a breakpoint of `breakpoints` below its end.
std::vector<std::size_t> cell_intervals(const std::vector<double>& grid,
                                        const std::vector<double>& breakpoints);

}  // namespace levy_sigkernel
