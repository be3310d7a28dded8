#include "levy_sigkernel/characteristics.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <string>

#include "levy_sigkernel/errors.hpp"

namespace levy_sigkernel {

namespace {

constexpr double kSymTolerance = 1e-12;

void check_grid(const std::vector<double>& grid, const char* what) {
  if (grid.size() < 2) throw InvalidTriplet(std::string(what) + ": time grid needs >= 2 points");
  if (grid.front() != 0.0) throw InvalidTriplet(std::string(what) + ": time grid must start at 0");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i + 1] > grid[i]) || !std::isfinite(grid[i + 1])) {
      throw InvalidTriplet(std::string(what) + ": time grid must be strictly increasing");
    }
  }
}

void check_psd(const Eigen::MatrixXd& m, int dim, const std::string& what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw InvalidTriplet(what + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
  }
  if (!m.allFinite()) throw InvalidTriplet(what + " has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTolerance * scale) {
    throw InvalidTriplet(what + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw InvalidTriplet(what + " is not positive semidefinite");
  }
}

void check_lie_element(const TruncatedTensor& x, int dim, int state_depth,
                       const std::string& what) {
  if (x.dim() != dim || x.depth() != state_depth) {
    throw InvalidTriplet(what + " must have dim " + std::to_string(dim) + " and depth " +
                         std::to_string(state_depth));
  }
  if (!x.all_finite()) throw InvalidTriplet(what + " has non-finite entries");
  if (x.scalar_part() != 0.0) throw InvalidTriplet(what + " must have zero scalar part");
  if (state_depth == 2) {
    auto l2 = x.level(2);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        const double s = l2[static_cast<std::size_t>(i * dim + j)] +
                         l2[static_cast<std::size_t>(j * dim + i)];
        if (std::abs(s) > kSymTolerance) {
          throw InvalidTriplet(what + ": level-2 part must be antisymmetric");
        }
      }
    }
  }
}

// Large-jump indicator and the compensated exponential for one atom.
TruncatedTensor atom_contribution(const Atom& atom, int depth) {
  const auto x = truncate(atom.x, depth);
  auto e = exp_tensor(x);
  e.data()[0] -= 1.0;
  if (norm_max(atom.x) <= 1.0) e -= x;
  return e * atom.weight;
}

// Sum over even n of E[xi^(x)n]/n!, n = 2..depth.
TruncatedTensor gaussian_jump_velocity(const JumpSpec& jumps, int dim, int depth) {
  TruncatedTensor out(dim, depth);
  double factorial = 1.0;
  for (int n = 1; n <= depth; ++n) {
    factorial *= n;
    if (n % 2 == 1) continue;
    const auto m = gaussian_moment_level(jumps.covariance, n);
    auto dst = out.level(n);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = jumps.intensity * m[i] / factorial;
  }
  return out;
}

// Log radial density of |z|, z ~ N(0, I_d).
double log_chi_density(double r, int d) {
  const double half = 0.5 * d;
  return (d - 1) * std::log(r) - 0.5 * r * r - (half - 1) * std::log(2.0) -
         boost::math::lgamma(half);
}

// E[(e^{kappa r} - 1) 1{r > r0}] for r ~ chi_d.
double chi_tail_moment(double kappa, double r0, int d) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double u) {
    const double r = r0 + u;
    const double x = kappa * r;
    const double log_e = x > 30.0 ? x : std::log(std::expm1(x));
    return std::exp(log_e + log_chi_density(r, d));
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

// Radical inverse in the given prime base.
double halton(std::size_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

// Average over unit directions u of g(|Sigma^{1/2} u|).
template <class G>
double angular_average(const Eigen::VectorXd& eig, G g) {
  const int d = static_cast<int>(eig.size());
  auto c_of = [&](const Eigen::VectorXd& u) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += std::max(eig[i], 0.0) * u[i] * u[i];
    return std::sqrt(s);
  };
  if (d == 1) return g(std::sqrt(std::max(eig[0], 0.0)));
  if (d == 2) {
    constexpr int kPoints = 256;
    double acc = 0.0;
    for (int k = 0; k < kPoints; ++k) {
      const double th = 2.0 * boost::math::constants::pi<double>() * k / kPoints;
      Eigen::VectorXd u(2);
      u << std::cos(th), std::sin(th);
      acc += g(c_of(u));
    }
    return acc / kPoints;
  }
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (d > 12) throw Unsupported("exponential_moment_value: GaussianCP with d > 12");
  constexpr std::size_t kPoints = 4096;
  double acc = 0.0;
  for (std::size_t k = 1; k <= kPoints; ++k) {
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i) {
      u[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * halton(k, kPrimes[i]) - 1.0);
    }
    acc += g(c_of(u / u.norm()));
  }
  return acc / static_cast<double>(kPoints);
}

}  // namespace

void LevyTriplet::validate() const {
  if (dim < 1) throw InvalidTriplet("dim must be >= 1");
  if (state_depth != 1 && state_depth != 2) throw InvalidTriplet("state depth must be 1 or 2");
  check_grid(time_grid, "triplet");
  if (intervals.size() + 1 != time_grid.size()) {
    throw InvalidTriplet("one interval spec per grid interval required");
  }
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    const std::string tag = "interval " + std::to_string(i);
    check_lie_element(iv.drift, dim, state_depth, tag + " drift");
    check_psd(iv.diffusion, dim, tag + " diffusion");
    switch (iv.jumps.kind) {
      case JumpKind::None:
        break;
      case JumpKind::Atomic:
        for (const auto& atom : iv.jumps.atoms) {
          if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) {
            throw InvalidTriplet(tag + ": atom weights must be finite and >= 0");
          }
          check_lie_element(atom.x, dim, state_depth, tag + " atom");
        }
        break;
      case JumpKind::GaussianCP:
        if (!(iv.jumps.intensity >= 0.0) || !std::isfinite(iv.jumps.intensity)) {
          throw InvalidTriplet(tag + ": jump intensity must be finite and >= 0");
        }
        check_psd(iv.jumps.covariance, dim, tag + " jump covariance");
        break;
    }
  }
}

void PiecewiseVelocity::validate() const {
  check_grid(time_grid, "velocity");
  if (values.size() + 1 != time_grid.size()) {
    throw InvalidParameter("velocity: one value per grid interval required");
  }
  for (const auto& v : values) {
    if (v.dim() != dim || v.depth() != depth) {
      throw InvalidParameter("velocity: value has wrong dim or depth");
    }
    if (v.scalar_part() != 0.0) throw InvalidParameter("velocity: scalar part must be 0");
    if (!v.all_finite()) throw InvalidParameter("velocity: non-finite coefficient");
  }
}

Eigen::MatrixXd covariance_from_factors(const std::vector<Eigen::VectorXd>& factors) {
  if (factors.empty()) throw InvalidParameter("covariance_from_factors: empty factor list");
  const auto d = factors.front().size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : factors) {
    if (s.size() != d) throw DimMismatch("covariance_from_factors: factor sizes differ");
    a += s * s.transpose();
  }
  return a;
}

LevyTriplet zero_triplet(int dim, double horizon, int state_depth) {
  LevyTriplet t;
  t.dim = dim;
  t.state_depth = state_depth;
  t.time_grid = {0.0, horizon};
  t.intervals.push_back({TruncatedTensor(dim, state_depth), Eigen::MatrixXd::Zero(dim, dim), {}});
  t.validate();
  return t;
}

LevyTriplet brownian_triplet(const Eigen::MatrixXd& covariance, double horizon) {
  auto t = zero_triplet(static_cast<int>(covariance.rows()), horizon);
  t.intervals[0].diffusion = covariance;
  t.validate();
  return t;
}

LevyTriplet deterministic_triplet(int dim, int state_depth, std::vector<double> time_grid,
                                  std::vector<TruncatedTensor> drifts) {
  LevyTriplet t;
  t.dim = dim;
  t.state_depth = state_depth;
  t.time_grid = std::move(time_grid);
  for (auto& b : drifts) {
    t.intervals.push_back({std::move(b), Eigen::MatrixXd::Zero(dim, dim), {}});
  }
  t.validate();
  return t;
}

TruncatedTensor level2_tensor(const Eigen::MatrixXd& m, int depth) {
  const int d = static_cast<int>(m.rows());
  TruncatedTensor out(d, depth);
  if (depth < 2) return out;
  auto l2 = out.level(2);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) l2[static_cast<std::size_t>(i * d + j)] = m(i, j);
  }
  return out;
}

std::vector<double> gaussian_moment_level(const Eigen::MatrixXd& cov, int n) {
  const int d = static_cast<int>(cov.rows());
  if (n % 2 == 1) return std::vector<double>(level_size(d, n), 0.0);
  // prev[m] holds the level-m moment array for m even.
  std::vector<double> prev{1.0};
  for (int m = 2; m <= n; m += 2) {
    const std::size_t size = level_size(d, m);
    std::vector<double> cur(size, 0.0);
    for (std::size_t idx = 0; idx < size; ++idx) {
      const Word w = index_word(idx, m, d);
      const int last = w.back() - 1;
      double acc = 0.0;
      for (int k = 0; k < m - 1; ++k) {
        const double c = cov(w[static_cast<std::size_t>(k)] - 1, last);
        if (c == 0.0) continue;
        // Index of the word with positions k and m-1 removed.
        std::size_t rest = 0;
        for (int p = 0; p < m - 1; ++p) {
          if (p == k) continue;
          rest = rest * static_cast<std::size_t>(d) + static_cast<std::size_t>(w[static_cast<std::size_t>(p)] - 1);
        }
        acc += c * prev[rest];
      }
      cur[idx] = acc;
    }
    prev = std::move(cur);
  }
  return prev;
}

PiecewiseVelocity characteristic_velocity(const LevyTriplet& triplet, int depth) {
  triplet.validate();
  if (depth < triplet.state_depth) {
    throw DepthTooSmall("characteristic_velocity: depth " + std::to_string(depth) +
                        " below state depth " + std::to_string(triplet.state_depth));
  }
  PiecewiseVelocity v;
  v.dim = triplet.dim;
  v.depth = depth;
  v.time_grid = triplet.time_grid;
  for (const auto& iv : triplet.intervals) {
    auto y = truncate(iv.drift, depth);
    y += level2_tensor(iv.diffusion * 0.5, depth);
    switch (iv.jumps.kind) {
      case JumpKind::None:
        break;
      case JumpKind::Atomic:
        for (const auto& atom : iv.jumps.atoms) y += atom_contribution(atom, depth);
        break;
      case JumpKind::GaussianCP:
        y += gaussian_jump_velocity(iv.jumps, triplet.dim, depth);
        break;
    }
    y.data()[0] = 0.0;
    v.values.push_back(std::move(y));
  }
  return v;
}

double exponential_moment_value(const LevyTriplet& triplet, double lambda, double horizon) {
  triplet.validate();
  if (!(lambda > 0.0)) throw InvalidParameter("exponential_moment_value: lambda must be > 0");
  if (horizon < 0.0 || horizon > triplet.horizon() * (1 + 1e-14)) {
    throw OutOfRange("exponential_moment_value: horizon outside the triplet grid");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < triplet.intervals.size(); ++i) {
    const double lo = triplet.time_grid[i];
    const double hi = std::min(triplet.time_grid[i + 1], horizon);
    if (hi <= lo) break;
    const auto& jumps = triplet.intervals[i].jumps;
    double rate = 0.0;
    if (jumps.kind == JumpKind::Atomic) {
      for (const auto& atom : jumps.atoms) {
        if (norm_max(atom.x) > 1.0) {
          rate += atom.weight * std::expm1(norm_p(dilate(atom.x, lambda), 1.0));
        }
      }
    } else if (jumps.kind == JumpKind::GaussianCP && jumps.intensity > 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jumps.covariance);
      const int d = triplet.dim;
      rate = jumps.intensity * angular_average(es.eigenvalues(), [&](double c) {
               if (c <= 0.0) return 0.0;
               return chi_tail_moment(lambda * c, 1.0 / c, d);
             });
    }
    total += rate * (hi - lo);
  }
  return total;
}

LevyTriplet dilate_triplet(const LevyTriplet& triplet, double lambda) {
  triplet.validate();
  LevyTriplet out = triplet;
  for (auto& iv : out.intervals) {
    TruncatedTensor b = iv.drift;
    if (iv.jumps.kind == JumpKind::Atomic) {
      for (auto& atom : iv.jumps.atoms) {
        const bool small_before = norm_max(atom.x) <= 1.0;
        const bool small_after = norm_max(dilate(atom.x, lambda)) <= 1.0;
        const double gain = (small_after ? 1.0 : 0.0) - (small_before ? 1.0 : 0.0);
        if (gain != 0.0) b += atom.x * (atom.weight * gain);
        atom.x = dilate(atom.x, lambda);
      }
    } else if (iv.jumps.kind == JumpKind::GaussianCP) {
      if (triplet.state_depth != 1) {
        throw Unsupported("dilate_triplet: Gaussian jumps only scale for state depth 1");
      }
      iv.jumps.covariance *= lambda * lambda;
    }
    iv.drift = dilate(b, lambda);
    iv.diffusion *= lambda * lambda;
  }
  return out;
}

PiecewiseVelocity truncate(const PiecewiseVelocity& v, int depth) {
  PiecewiseVelocity out = v;
  out.depth = depth;
  for (auto& x : out.values) x = truncate(x, depth);
  return out;
}

PiecewiseVelocity dilate(const PiecewiseVelocity& v, double lambda) {
  PiecewiseVelocity out = v;
  for (auto& x : out.values) x = dilate(x, lambda);
  return out;
}

PiecewiseVelocity constant_velocity(const TruncatedTensor& x, double horizon) {
  PiecewiseVelocity v;
  v.dim = x.dim();
  v.depth = x.depth();
  v.time_grid = {0.0, horizon};
  v.values = {x};
  v.validate();
  return v;
}

std::size_t interval_index(const std::vector<double>& grid, double a, double b) {
  const double tol = 1e-12 * std::max(1.0, grid.back());
  if (a < grid.front() - tol || b > grid.back() + tol || b < a) {
    throw OutOfRange("interval_index: [" + std::to_string(a) + ", " + std::to_string(b) +
                     "] outside the grid");
  }
  auto it = std::upper_bound(grid.begin(), grid.end(), a + tol);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - grid.begin()) - 1));
  i = std::min(i, grid.size() - 2);
  if (b > grid[i + 1] + tol) {
    throw GridMismatch("interval_index: [" + std::to_string(a) + ", " + std::to_string(b) +
                       "] straddles a breakpoint");
  }
  return i;
}

}  // namespace levy_sigkernel
