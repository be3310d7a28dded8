#include "levy_sigkernel/development.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <iostream>

#include "levy_sigkernel/errors.hpp"

namespace levy_sigkernel {

namespace {

void check_span(const PiecewiseVelocity& v, double s, double t) {
  const double tol = 1e-12 * std::max(1.0, v.horizon());
  if (!(s <= t) || s < -tol || t > v.horizon() + tol) {
    throw OutOfRange("[" + std::to_string(s) + ", " + std::to_string(t) +
                     "] outside the velocity grid [0, " + std::to_string(v.horizon()) + "]");
  }
}

// Calls fn(i, length) for each grid interval i overlapping [s, t].
template <class F>
void for_each_overlap(const std::vector<double>& grid, double s, double t, F fn) {
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double lo = std::max(grid[i], s);
    const double hi = std::min(grid[i + 1], t);
    if (hi > lo) fn(i, hi - lo);
  }
}

TruncatedTensor padded_difference(const TruncatedTensor& x, const TruncatedTensor& y) {
  return truncate(x, std::max(x.depth(), y.depth())) - y;
}

}  // namespace

TruncatedTensor develop(const PiecewiseVelocity& v, double s, double t, int depth) {
  v.validate();
  check_span(v, s, t);
  auto out = TruncatedTensor::scalar(v.dim, depth, 1.0);
  for_each_overlap(v.time_grid, s, t, [&](std::size_t i, double du) {
    out = tensor_mul(out, exp_tensor(truncate(v.values[i], depth) * du), depth);
  });
  return out;
}

TruncatedTensor expected_signature(const LevyTriplet& triplet, double t, int depth) {
  if (!std::isfinite(exponential_moment_value(triplet, 1.0, t))) {
    std::cerr << "warning: exponential moment condition fails; expected signature may not "
                 "characterize the law\n";
  }
  const int d = std::max(depth, triplet.state_depth);
  return truncate(develop(characteristic_velocity(triplet, d), 0.0, t, depth), depth);
}

std::vector<double> bell_polynomials(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> b(n + 1, 0.0);
  b[0] = 1.0;
  // binom[k] = C(m, k) for the current m.
  std::vector<double> binom{1.0};
  for (std::size_t m = 0; m < n; ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= m; ++k) acc += binom[k] * b[m - k] * y[k];
    b[m + 1] = acc;
    std::vector<double> next(m + 2, 1.0);
    for (std::size_t k = 1; k <= m; ++k) next[k] = binom[k - 1] + binom[k];
    binom = std::move(next);
  }
  return b;
}

std::vector<double> bell_numbers(int n) {
  if (n < 0) throw InvalidParameter("bell_numbers: n must be >= 0");
  const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return bell_polynomials(ones);
}

std::vector<double> exp_series_coefficients(std::span<const double> a, int n) {
  // n c_n = sum_k k a_k c_{n-k}
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[0] = 1.0;
  for (int m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (int k = 1; k <= m && k < static_cast<int>(a.size()); ++k) {
      acc += k * a[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(m - k)];
    }
    c[static_cast<std::size_t>(m)] = acc / m;
  }
  return c;
}

double integrate(const PiecewiseVelocity& v, double s, double t,
                 const std::function<double(const TruncatedTensor&)>& g) {
  check_span(v, s, t);
  double acc = 0.0;
  for_each_overlap(v.time_grid, s, t, [&](std::size_t i, double du) { acc += du * g(v.values[i]); });
  return acc;
}

double integrate(const PiecewiseVelocity& v, const PiecewiseVelocity& w, double s, double t,
                 const std::function<double(const TruncatedTensor&, const TruncatedTensor&)>& g) {
  check_span(v, s, t);
  check_span(w, s, t);
  std::vector<double> grid = v.time_grid;
  grid.insert(grid.end(), w.time_grid.begin(), w.time_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double acc = 0.0;
  for_each_overlap(grid, s, t, [&](std::size_t i, double du) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    auto locate = [&](const PiecewiseVelocity& p) -> const TruncatedTensor& {
      auto it = std::upper_bound(p.time_grid.begin(), p.time_grid.end(), mid);
      const auto k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
          (it - p.time_grid.begin()) - 1, 0, static_cast<std::ptrdiff_t>(p.values.size()) - 1));
      return p.values[k];
    };
    acc += du * g(locate(v), locate(w));
  });
  return acc;
}

double bound_level(const PiecewiseVelocity& v, double s, double t, int n) {
  if (n < 0) throw InvalidParameter("bound_level: n must be >= 0");
  std::vector<double> masses(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 1; k <= std::min(n, v.depth); ++k) {
    masses[static_cast<std::size_t>(k)] =
        integrate(v, s, t, [k](const TruncatedTensor& y) { return level_norms(y).values[static_cast<std::size_t>(k)]; });
  }
  return exp_series_coefficients(masses, n)[static_cast<std::size_t>(n)];
}

double bound_gronwall(const PiecewiseVelocity& v, double s, double t) {
  return std::exp(integrate(v, s, t, [](const TruncatedTensor& y) { return norm_p(y, 1.0); }));
}

double bound_lipschitz(const PiecewiseVelocity& v, const PiecewiseVelocity& w, double s, double t) {
  const auto norm1 = [](const TruncatedTensor& y) { return norm_p(y, 1.0); };
  const double a = integrate(v, s, t, norm1);
  const double b = integrate(w, s, t, norm1);
  const double diff = integrate(v, w, s, t, [](const TruncatedTensor& x, const TruncatedTensor& y) {
    return norm_p(padded_difference(x, y), 1.0);
  });
  return std::exp(a + b) * diff;
}

double bound_inner_truncation(const PiecewiseVelocity& v, double s, double t, int n) {
  if (n < 0) throw InvalidParameter("bound_inner_truncation: N must be >= 0");
  const double a = integrate(v, s, t, [](const TruncatedTensor& y) { return norm_p(y, 1.0); });
  const double tail = integrate(v, s, t, [n](const TruncatedTensor& y) {
    return norm_p(y - truncate(truncate(y, n), y.depth()), 1.0);
  });
  return std::exp(a) * tail;
}

double bound_outer_truncation(const PiecewiseVelocity& v, double s, double t, int n, int m) {
  if (n < 1 || m < n) throw InvalidParameter("bound_outer_truncation: requires M >= N >= 1");
  const double l = integrate(v, s, t, [n](const TruncatedTensor& y) { return norm_p(truncate(y, n), 1.0); });
  const int k = (m + n - 1) / n;
  return std::exp(l - std::lgamma(k + 1.0)) * std::pow(l, k);
}

RemainderDiagnostics remainder_diagnostics(double rho, int m, RemainderMode mode) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("remainder_diagnostics: rho must be > 0");
  if (m < 1) throw InvalidParameter("remainder_diagnostics: m must be >= 1");
  if (mode == RemainderMode::GeometricJumps && rho >= 1.0) {
    throw InvalidParameter("remainder_diagnostics: geometric mode requires rho < 1");
  }
  // Factorial terms rho^n B_n / n! are the series coefficients of
  // exp(sum_k rho^k x^k / k!). Geometric terms beta_n rho^n come from the
  // recurrence n beta_n = (2n - 1) beta_{n-1} - (n - 2) beta_{n-2}.
  constexpr int kMaxTerms = 1000000;
  std::vector<double> a{0.0};
  std::vector<double> c{1.0};
  RemainderDiagnostics out;
  double sum = 0.0, prev_term = 0.0;
  double ak = 1.0;
  double g1 = 1.0, g2 = 0.0;  // beta_{n-1} rho^{n-1}, beta_{n-2} rho^{n-2}
  for (int n = 1; n <= kMaxTerms; ++n) {
    double term;
    if (mode == RemainderMode::FactorialJumps) {
      ak *= rho / n;
      a.push_back(ak);
      double acc = 0.0;
      for (int k = 1; k <= n; ++k) acc += k * a[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(n - k)];
      c.push_back(acc / n);
      term = c.back();
    } else {
      term = n == 1 ? rho : ((2.0 * n - 1) * rho * g1 - (n - 2.0) * rho * rho * g2) / n;
      g2 = g1;
      g1 = term;
    }
    if (n < m) continue;
    if (n == m) {
      if (mode == RemainderMode::FactorialJumps) {
        out.asymptotic = term;
      } else {
        const double pi = boost::math::constants::pi<double>();
        out.asymptotic = std::exp(2.0 * std::sqrt(m) + m * std::log(rho)) /
                         (2.0 * std::pow(m, 0.75) * std::sqrt(pi * std::exp(1.0))) / (1.0 - rho);
      }
    }
    sum += term;
    ++out.terms;
    if (term < 1e-16 * sum && term <= prev_term) break;
    prev_term = term;
  }
  out.exact = sum;
  return out;
}

double gaussian_mgf_moment(int d, int m) {
  if (d < 1 || m < 0) throw InvalidParameter("gaussian_mgf_moment: d >= 1 and M >= 0");
  double prod = 1.0;
  for (int k = 0; k < m; ++k) prod *= 0.5 * d + k;
  return std::pow(2.0, 2.0 * m + 0.5 * d) * prod;
}

double gaussian_jump_tail_bound(const Eigen::MatrixXd& sigma, double intensity, double t, int m) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
    throw DimMismatch("gaussian_jump_tail_bound: covariance must be square");
  }
  if (intensity < 0.0 || t < 0.0 || m < 0) throw InvalidParameter("gaussian_jump_tail_bound: negative input");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
  const int d = static_cast<int>(sigma.rows());
  const double log_rest = lmax + std::log(gaussian_mgf_moment(d, m)) - std::lgamma(2.0 * m + 1.0);
  return std::pow(lmax, m) * std::exp(log_rest) * intensity * t;
}

}  // namespace levy_sigkernel
