#pragma once

// Free developments of piecewise-constant velocities, expected signatures,
// and the quantitative estimates that control them.

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/tensor_algebra.hpp"

namespace levy_sigkernel {

/// Ordered product of exp(du_i * y_i) over the grid intervals meeting [s, t].
TruncatedTensor develop(const PiecewiseVelocity& v, double s, double t, int depth);

TruncatedTensor expected_signature(const LevyTriplet& triplet, double t, int depth);

/// Complete exponential Bell polynomials B_0..B_n of y_1..y_n (B_0 = 1).
std::vector<double> bell_polynomials(std::span<const double> y);
/// Bell numbers B_0..B_n.
std::vector<double> bell_numbers(int n);

/// Coefficients c_0..c_n of exp(sum_k a_k x^k), i.e. c_n = B_n(1! a_1, .., n! a_n) / n!.
/// a[0] is ignored.
std::vector<double> exp_series_coefficients(std::span<const double> a, int n);

/// int_s^t g(y(u)) du for a piecewise-constant y.
double integrate(const PiecewiseVelocity& v, double s, double t,
                 const std::function<double(const TruncatedTensor&)>& g);
/// int_s^t g(y(u), z(u)) du over the merged grid of two velocities.
double integrate(const PiecewiseVelocity& v, const PiecewiseVelocity& w, double s, double t,
                 const std::function<double(const TruncatedTensor&, const TruncatedTensor&)>& g);

double bound_level(const PiecewiseVelocity& v, double s, double t, int n);
double bound_gronwall(const PiecewiseVelocity& v, double s, double t);
double bound_lipschitz(const PiecewiseVelocity& v, const PiecewiseVelocity& w, double s, double t);
double bound_inner_truncation(const PiecewiseVelocity& v, double s, double t, int n);
/// Bounds the tail from level M of the development of the level-N truncation.
double bound_outer_truncation(const PiecewiseVelocity& v, double s, double t, int n, int m);

enum class RemainderMode { FactorialJumps, GeometricJumps };

struct RemainderDiagnostics {
  double exact = 0.0;
  double asymptotic = 0.0;
  int terms = 0;
};

RemainderDiagnostics remainder_diagnostics(double rho, int m, RemainderMode mode);

/// E[exp(|xi|^2 / 4) |xi|^(2M)] for xi ~ N(0, I_d).
double gaussian_mgf_moment(int d, int m);

/// Bound on int_0^t |y - pi_(0,2M) y|_1 for compound Poisson jumps N(0, Sigma)
/// with constant intensity.
double gaussian_jump_tail_bound(const Eigen::MatrixXd& sigma, double intensity, double t, int m);

}  // namespace levy_sigkernel
