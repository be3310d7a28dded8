#include "levy_sigkernel/kernel_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levy_sigkernel/development.hpp"
#include "levy_sigkernel/errors.hpp"

namespace levy_sigkernel {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const VectorXd>;
using Map = Eigen::Map<VectorXd>;

constexpr double kGridTolerance = 1e-12;

void check_grid(const std::vector<double>& grid, const char* name) {
  if (grid.size() < 2) throw GridMismatch(std::string(name) + ": need at least two points");
  if (grid.front() != 0.0) throw GridMismatch(std::string(name) + ": must start at 0");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i + 1] > grid[i]) || !std::isfinite(grid[i + 1])) {
      throw GridMismatch(std::string(name) + ": must be strictly increasing");
    }
  }
}

// Linear system with coefficients constant on each pair of intervals:
//   w_st = alpha w + <A, f> + <At, g>
//   f_s  = w p + L f + K g          (coefficients of the s-interval)
//   g_t  = w pt + Lt g + Kt f       (coefficients of the t-interval)
struct LinearModel {
  std::size_t nf = 0, ng = 0;
  std::size_t n_it = 0;  // number of t-intervals
  std::vector<std::size_t> cs, ct;  // cell -> interval
  MatrixXd alpha;                   // s-intervals x t-intervals
  std::vector<VectorXd> A, At;      // indexed I * n_it + J
  std::vector<VectorXd> p, pt;
  std::vector<MatrixXd> L, K, Lt, Kt;

  double G(std::size_t i, std::size_t j, std::size_t, std::size_t, double w, const double* f,
           const double* g) const {
    const std::size_t I = cs[i], J = ct[j];
    const std::size_t k = I * n_it + J;
    const double cross = A[k].dot(CMap(f, static_cast<Eigen::Index>(nf))) +
                         At[k].dot(CMap(g, static_cast<Eigen::Index>(ng)));
    return alpha(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) * w + cross;
  }
  void F(std::size_t i, double w, const double* f, const double* g, double* out) const {
    const std::size_t I = cs[i];
    Map(out, static_cast<Eigen::Index>(nf)) =
        w * p[I] + L[I] * CMap(f, static_cast<Eigen::Index>(nf)) +
        K[I] * CMap(g, static_cast<Eigen::Index>(ng));
  }
  void Ft(std::size_t j, double w, const double* f, const double* g, double* out) const {
    const std::size_t J = ct[j];
    Map(out, static_cast<Eigen::Index>(ng)) =
        w * pt[J] + Lt[J] * CMap(g, static_cast<Eigen::Index>(ng)) +
        Kt[J] * CMap(f, static_cast<Eigen::Index>(nf));
  }
};

// Scalar equation w_st = alpha w; alpha from nodes or cells.
struct ScalarModel {
  std::size_t nf = 0, ng = 0;
  const MatrixXd* alpha = nullptr;
  bool cells = false;

  double G(std::size_t i, std::size_t j, std::size_t p, std::size_t q, double w, const double*,
           const double*) const {
    const auto a = cells ? (*alpha)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                         : (*alpha)(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    return a * w;
  }
  void F(std::size_t, double, const double*, const double*, double*) const {}
  void Ft(std::size_t, double, const double*, const double*, double*) const {}
};

template <class Model>
void sweep(const Model& m, KernelSurface& out) {
  const std::size_t ns = out.n_s(), nt = out.n_t();
  const std::size_t nf = m.nf, ng = m.ng;
  out.w.assign(ns * nt, 1.0);
  out.f_data.assign(ns * nt * nf, 0.0);
  out.g_data.assign(ns * nt * ng, 0.0);
  auto fp = [&](std::size_t p, std::size_t q) { return out.f_data.data() + (p * nt + q) * nf; };
  auto gp = [&](std::size_t p, std::size_t q) { return out.g_data.data() + (p * nt + q) * ng; };

  std::vector<double> k1f(nf), k2f(nf), k1g(ng), k2g(ng), fstar(nf), gstar(ng);
  const std::vector<double> zero_f(nf, 0.0), zero_g(ng, 0.0);

  // t = 0 row: w = 1, g = 0.
  for (std::size_t p = 0; p + 1 < ns && nf > 0; ++p) {
    const double h = out.s_grid[p + 1] - out.s_grid[p];
    const double* f0 = fp(p, 0);
    m.F(p, 1.0, f0, zero_g.data(), k1f.data());
    for (std::size_t k = 0; k < nf; ++k) fstar[k] = f0[k] + h * k1f[k];
    m.F(p, 1.0, fstar.data(), zero_g.data(), k2f.data());
    double* f1 = fp(p + 1, 0);
    for (std::size_t k = 0; k < nf; ++k) f1[k] = f0[k] + 0.5 * h * (k1f[k] + k2f[k]);
  }
  // s = 0 column: w = 1, f = 0.
  for (std::size_t q = 0; q + 1 < nt && ng > 0; ++q) {
    const double k = out.t_grid[q + 1] - out.t_grid[q];
    const double* g0 = gp(0, q);
    m.Ft(q, 1.0, zero_f.data(), g0, k1g.data());
    for (std::size_t r = 0; r < ng; ++r) gstar[r] = g0[r] + k * k1g[r];
    m.Ft(q, 1.0, zero_f.data(), gstar.data(), k2g.data());
    double* g1 = gp(0, q + 1);
    for (std::size_t r = 0; r < ng; ++r) g1[r] = g0[r] + 0.5 * k * (k1g[r] + k2g[r]);
  }

  for (std::size_t p = 0; p + 1 < ns; ++p) {
    const double h = out.s_grid[p + 1] - out.s_grid[p];
    for (std::size_t q = 0; q + 1 < nt; ++q) {
      const double k = out.t_grid[q + 1] - out.t_grid[q];
      const double w00 = out.w[p * nt + q];
      const double w10 = out.w[(p + 1) * nt + q];
      const double w01 = out.w[p * nt + q + 1];
      const double G00 = m.G(p, q, p, q, w00, fp(p, q), gp(p, q));
      const double G10 = m.G(p, q, p + 1, q, w10, fp(p + 1, q), gp(p + 1, q));
      const double G01 = m.G(p, q, p, q + 1, w01, fp(p, q + 1), gp(p, q + 1));

      // Predictor.
      if (nf > 0) {
        const double* f01 = fp(p, q + 1);
        m.F(p, w01, f01, gp(p, q + 1), k1f.data());
        for (std::size_t r = 0; r < nf; ++r) fstar[r] = f01[r] + h * k1f[r];
      }
      if (ng > 0) {
        const double* g10 = gp(p + 1, q);
        m.Ft(q, w10, fp(p + 1, q), g10, k1g.data());
        for (std::size_t r = 0; r < ng; ++r) gstar[r] = g10[r] + k * k1g[r];
      }
      const double base = (w10 + w01) - w00;
      const double wstar = base + 0.5 * h * k * (G10 + G01);
      const double G11 = m.G(p, q, p + 1, q + 1, wstar, fstar.data(), gstar.data());

      // Corrector.
      const double w11 = base + 0.25 * h * k * ((G00 + G11) + (G10 + G01));
      out.w[(p + 1) * nt + q + 1] = w11;
      if (nf > 0) {
        m.F(p, w11, fstar.data(), gstar.data(), k2f.data());
        const double* f01 = fp(p, q + 1);
        double* f11 = fp(p + 1, q + 1);
        for (std::size_t r = 0; r < nf; ++r) f11[r] = f01[r] + 0.5 * h * (k1f[r] + k2f[r]);
      }
      if (ng > 0) {
        m.Ft(q, w11, fstar.data(), gstar.data(), k2g.data());
        const double* g10 = gp(p + 1, q);
        double* g11 = gp(p + 1, q + 1);
        for (std::size_t r = 0; r < ng; ++r) g11[r] = g10[r] + 0.5 * k * (k1g[r] + k2g[r]);
      }
    }
  }
  for (double v : out.w) {
    if (!std::isfinite(v)) throw NumericalInconsistency("Goursat sweep produced a non-finite value");
  }
}

std::vector<double> with_midpoints(const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(2 * grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    out.push_back(grid[i]);
    out.push_back(0.5 * (grid[i] + grid[i + 1]));
  }
  out.push_back(grid.back());
  return out;
}

// Runs solve(s_grid, t_grid), optionally with Richardson extrapolation.
template <class Solve>
KernelSurface solve_with_options(const Solve& solve, const std::vector<double>& s_grid,
                                 const std::vector<double>& t_grid, const SolveOptions& options) {
  KernelSurface coarse = solve(s_grid, t_grid);
  if (!options.richardson) return coarse;
  const KernelSurface fine = solve(with_midpoints(s_grid), with_midpoints(t_grid));
  const std::size_t nt = coarse.n_t(), fnt = fine.n_t();
  const std::size_t nf = coarse.f_size(), ng = coarse.g_size();
  for (std::size_t p = 0; p < coarse.n_s(); ++p) {
    for (std::size_t q = 0; q < nt; ++q) {
      const std::size_t c = p * nt + q, f = (2 * p) * fnt + 2 * q;
      coarse.w[c] = (4.0 * fine.w[f] - coarse.w[c]) / 3.0;
      for (std::size_t r = 0; r < nf; ++r) {
        coarse.f_data[c * nf + r] = (4.0 * fine.f_data[f * nf + r] - coarse.f_data[c * nf + r]) / 3.0;
      }
      for (std::size_t r = 0; r < ng; ++r) {
        coarse.g_data[c * ng + r] = (4.0 * fine.g_data[f * ng + r] - coarse.g_data[c * ng + r]) / 3.0;
      }
    }
  }
  coarse.richardson = true;
  coarse.scheme_order = 4;
  return coarse;
}

// Cumulative sum over cells of (cell width) * rate(interval of cell).
std::vector<double> cumulative_mass(const std::vector<double>& grid,
                                    const std::vector<std::size_t>& cells,
                                    const std::vector<double>& rate) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    out[i + 1] = out[i] + (grid[i + 1] - grid[i]) * rate[cells[i]];
  }
  return out;
}

VectorXd as_vector(const TruncatedTensor& x) {
  return Eigen::Map<const VectorXd>(x.data().data(), static_cast<Eigen::Index>(x.size()));
}

// Matrix of the linear map x -> op(x) on T^{in_depth} -> T^{out_depth}.
template <class Op>
MatrixXd operator_matrix(int dim, int in_depth, int out_depth, const Op& op) {
  TruncatedTensor basis(dim, in_depth);
  const std::size_t out_size = TruncatedTensor(dim, out_depth).size();
  MatrixXd m(static_cast<Eigen::Index>(out_size), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    basis.data()[k] = 1.0;
    const TruncatedTensor y = truncate(op(basis), out_depth);
    m.col(static_cast<Eigen::Index>(k)) = as_vector(y);
    basis.data()[k] = 0.0;
  }
  return m;
}

void init_surface(KernelSurface& out, const std::vector<double>& s_grid,
                  const std::vector<double>& t_grid) {
  out.s_grid = s_grid;
  out.t_grid = t_grid;
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelSurface

std::size_t KernelSurface::f_size() const {
  return f_depth < 0 ? 0 : TruncatedTensor(dim, f_depth).size();
}

std::size_t KernelSurface::g_size() const {
  return g_depth < 0 ? 0 : TruncatedTensor(dim, g_depth).size();
}

TruncatedTensor KernelSurface::f_at(std::size_t p, std::size_t q) const {
  if (f_depth < 0) throw Unsupported("surface carries no f component");
  TruncatedTensor out(dim, f_depth);
  const std::size_t n = out.size();
  std::copy_n(f_data.begin() + static_cast<std::ptrdiff_t>((p * n_t() + q) * n), n, out.data().begin());
  return out;
}

TruncatedTensor KernelSurface::g_at(std::size_t p, std::size_t q) const {
  if (g_depth < 0) throw Unsupported("surface carries no f~ component");
  TruncatedTensor out(dim, g_depth);
  const std::size_t n = out.size();
  std::copy_n(g_data.begin() + static_cast<std::ptrdiff_t>((p * n_t() + q) * n), n, out.data().begin());
  return out;
}

KernelSurface KernelSurface::transposed() const {
  KernelSurface out = *this;
  std::swap(out.s_grid, out.t_grid);
  std::swap(out.M, out.N);
  std::swap(out.f_depth, out.g_depth);
  std::swap(out.mass_s, out.mass_t);
  const std::size_t ns = n_s(), nt = n_t();
  const std::size_t nf = f_size(), ng = g_size();
  out.f_data.assign(g_data.size(), 0.0);
  out.g_data.assign(f_data.size(), 0.0);
  for (std::size_t p = 0; p < ns; ++p) {
    for (std::size_t q = 0; q < nt; ++q) {
      const std::size_t a = p * nt + q, b = q * ns + p;
      out.w[b] = w[a];
      std::copy_n(g_data.begin() + static_cast<std::ptrdiff_t>(a * ng), ng,
                  out.f_data.begin() + static_cast<std::ptrdiff_t>(b * ng));
      std::copy_n(f_data.begin() + static_cast<std::ptrdiff_t>(a * nf), nf,
                  out.g_data.begin() + static_cast<std::ptrdiff_t>(b * nf));
    }
  }
  return out;
}

double KernelSurface::apriori_ratio() const {
  if (mass_s.size() != n_s() || mass_t.size() != n_t()) {
    throw Unsupported("apriori_ratio: surface has no variation masses");
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < n_s(); ++p) {
    for (std::size_t q = 0; q < n_t(); ++q) {
      worst = std::max(worst, std::abs(w_at(p, q)) / apriori_psi(mass_s[p], mass_t[q]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Grids

std::vector<double> make_grid(double horizon, int steps, const std::vector<double>& breakpoints) {
  if (!(horizon > 0.0) || steps < 1) throw InvalidParameter("make_grid: T > 0 and steps >= 1 required");
  std::vector<double> grid;
  for (int k = 0; k <= steps; ++k) grid.push_back(horizon * k / steps);
  grid.back() = horizon;
  const double tol = kGridTolerance * horizon;
  for (double b : breakpoints) {
    if (!(b > tol && b < horizon - tol)) continue;
    auto it = std::lower_bound(grid.begin(), grid.end(), b);
    if (it != grid.end() && std::abs(*it - b) <= tol) {
      *it = b;
    } else if (it != grid.begin() && std::abs(*(it - 1) - b) <= tol) {
      *(it - 1) = b;
    } else {
      grid.insert(it, b);
    }
  }
  return grid;
}

std::vector<std::size_t> cell_intervals(const std::vector<double>& grid,
                                        const std::vector<double>& breakpoints) {
  check_grid(grid, "grid");
  const double end = grid.back();
  const double tol = kGridTolerance * std::max(1.0, end);
  if (end > breakpoints.back() + tol) {
    throw GridMismatch("grid extends beyond the coefficient horizon " + std::to_string(breakpoints.back()));
  }
  for (double b : breakpoints) {
    if (b <= tol || b >= end - tol) continue;
    auto it = std::lower_bound(grid.begin(), grid.end(), b - tol);
    if (it == grid.end() || std::abs(*it - b) > tol) {
      throw GridMismatch("grid does not contain breakpoint " + std::to_string(b));
    }
  }
  std::vector<std::size_t> cells(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), mid);
    cells[i] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        (it - breakpoints.begin()) - 1, 0, static_cast<std::ptrdiff_t>(breakpoints.size()) - 2));
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Truncated system

KernelSurface solve_truncated_system(const PiecewiseVelocity& v, const PiecewiseVelocity& vt,
                                     int M, int N, const std::vector<double>& s_grid,
                                     const std::vector<double>& t_grid,
                                     const SolveOptions& options) {
  if (M < 1 || N < 1) throw InvalidParameter("solve_truncated_system: M, N >= 1 required");
  v.validate();
  vt.validate();
  if (v.dim != vt.dim) throw DimMismatch("solve_truncated_system: velocity dimensions differ");
  const int d = v.dim;
  // Levels of the velocity that feed the ODE components; for M = N both are N - 1.
  const int a_lvl = std::min(M, N - 1);
  const int b_lvl = std::min(N, M - 1);
  const int fd = N - 1, gd = M - 1;

  LinearModel base;
  base.nf = TruncatedTensor(d, fd).size();
  base.ng = TruncatedTensor(d, gd).size();
  const std::size_t n_is = v.values.size(), n_it = vt.values.size();
  base.n_it = n_it;
  base.alpha.resize(static_cast<Eigen::Index>(n_is), static_cast<Eigen::Index>(n_it));

  std::vector<TruncatedTensor> yM, ya, ytN, ytb;
  for (const auto& y : v.values) {
    yM.push_back(truncate(y, M));
    ya.push_back(truncate(y, a_lvl));
  }
  for (const auto& y : vt.values) {
    ytN.push_back(truncate(y, N));
    ytb.push_back(truncate(y, b_lvl));
  }
  for (std::size_t I = 0; I < n_is; ++I) {
    base.p.push_back(as_vector(truncate(ya[I], fd)));
    base.L.push_back(operator_matrix(d, fd, fd, [&](const TruncatedTensor& f) { return tensor_mul(f, ya[I], fd); }));
    base.K.push_back(operator_matrix(d, gd, fd, [&](const TruncatedTensor& g) { return adjoint_left_zero(g, yM[I]); }));
  }
  for (std::size_t J = 0; J < n_it; ++J) {
    base.pt.push_back(as_vector(truncate(ytb[J], gd)));
    base.Lt.push_back(operator_matrix(d, gd, gd, [&](const TruncatedTensor& g) { return tensor_mul(g, ytb[J], gd); }));
    base.Kt.push_back(operator_matrix(d, fd, gd, [&](const TruncatedTensor& f) { return adjoint_left_zero(f, ytN[J]); }));
  }
  for (std::size_t I = 0; I < n_is; ++I) {
    for (std::size_t J = 0; J < n_it; ++J) {
      base.alpha(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) = inner_product(yM[I], ytN[J]);
      base.A.push_back(as_vector(truncate(adjoint_right_zero(ya[I], ytN[J]), fd)));
      base.At.push_back(as_vector(truncate(adjoint_right_zero(ytb[J], yM[I]), gd)));
    }
  }

  std::vector<double> rate_s, rate_t;
  for (const auto& y : v.values) rate_s.push_back(norm_p(y, 1.0));
  for (const auto& y : vt.values) rate_t.push_back(norm_p(y, 1.0));

  auto solve = [&](const std::vector<double>& sg, const std::vector<double>& tg) {
    LinearModel m = base;
    m.cs = cell_intervals(sg, v.time_grid);
    m.ct = cell_intervals(tg, vt.time_grid);
    KernelSurface out;
    init_surface(out, sg, tg);
    out.dim = d;
    out.M = M;
    out.N = N;
    out.f_depth = fd;
    out.g_depth = gd;
    out.mass_s = cumulative_mass(sg, m.cs, rate_s);
    out.mass_t = cumulative_mass(tg, m.ct, rate_t);
    sweep(m, out);
    return out;
  };
  KernelSurface out = solve_with_options(solve, s_grid, t_grid, options);
  out.certificate = truncation_certificate(v, vt, M, N, s_grid.back(), t_grid.back());
  return out;
}

// ---------------------------------------------------------------------------
// Second-level system

namespace {

struct Level2Data {
  std::vector<VectorXd> b;    // vector drift
  std::vector<MatrixXd> area; // antisymmetric area drift
  std::vector<MatrixXd> a;    // diffusion
};

Level2Data level2_data(const LevyTriplet& tr) {
  tr.validate();
  Level2Data out;
  const int d = tr.dim;
  for (const auto& iv : tr.intervals) {
    if (iv.jumps.kind != JumpKind::None &&
        !(iv.jumps.kind == JumpKind::Atomic && iv.jumps.atoms.empty()) &&
        !(iv.jumps.kind == JumpKind::GaussianCP && iv.jumps.intensity == 0.0)) {
      throw Unsupported("solve_level2_system: triplets with jumps are not continuous");
    }
    VectorXd b(d);
    for (int i = 0; i < d; ++i) b[i] = iv.drift.level(1)[static_cast<std::size_t>(i)];
    MatrixXd area = MatrixXd::Zero(d, d);
    if (tr.state_depth == 2) {
      auto l2 = iv.drift.level(2);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) area(i, j) = l2[static_cast<std::size_t>(i * d + j)];
      }
    }
    out.b.push_back(b);
    out.area.push_back(area);
    out.a.push_back(iv.diffusion);
  }
  return out;
}

// Embeds a d-vector into the coordinates of a depth-1 tensor (scalar slot 0).
VectorXd embed(const VectorXd& x) {
  VectorXd out = VectorXd::Zero(x.size() + 1);
  out.tail(x.size()) = x;
  return out;
}

MatrixXd embed(const MatrixXd& m) {
  MatrixXd out = MatrixXd::Zero(m.rows() + 1, m.cols() + 1);
  out.bottomRightCorner(m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

KernelSurface solve_level2_system(const LevyTriplet& triplet, const LevyTriplet& triplet_t,
                                  const std::vector<double>& s_grid,
                                  const std::vector<double>& t_grid,
                                  const SolveOptions& options) {
  if (triplet.dim != triplet_t.dim) throw DimMismatch("solve_level2_system: dimensions differ");
  const Level2Data x = level2_data(triplet);
  const Level2Data y = level2_data(triplet_t);
  const int d = triplet.dim;
  const std::size_t n_is = x.b.size(), n_it = y.b.size();

  LinearModel base;
  base.nf = base.ng = static_cast<std::size_t>(d) + 1;
  base.n_it = n_it;
  base.alpha.resize(static_cast<Eigen::Index>(n_is), static_cast<Eigen::Index>(n_it));
  std::vector<MatrixXd> c, ct;
  for (std::size_t I = 0; I < n_is; ++I) c.push_back(0.5 * x.a[I] - x.area[I]);
  for (std::size_t J = 0; J < n_it; ++J) ct.push_back(0.5 * y.a[J] - y.area[J]);
  for (std::size_t I = 0; I < n_is; ++I) {
    base.p.push_back(embed(x.b[I]));
    base.L.push_back(MatrixXd::Zero(d + 1, d + 1));
    base.K.push_back(embed(c[I]));
  }
  for (std::size_t J = 0; J < n_it; ++J) {
    base.pt.push_back(embed(y.b[J]));
    base.Lt.push_back(MatrixXd::Zero(d + 1, d + 1));
    base.Kt.push_back(embed(ct[J]));
  }
  for (std::size_t I = 0; I < n_is; ++I) {
    for (std::size_t J = 0; J < n_it; ++J) {
      base.alpha(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) =
          x.b[I].dot(y.b[J]) + x.area[I].cwiseProduct(y.area[J]).sum() +
          0.25 * x.a[I].cwiseProduct(y.a[J]).sum();
      // <c~.f, b> = <f, c~^T b>,  <c.f~, b~> = <f~, c^T b~>
      base.A.push_back(embed(VectorXd(ct[J].transpose() * x.b[I])));
      base.At.push_back(embed(VectorXd(c[I].transpose() * y.b[J])));
    }
  }

  auto rates = [](const Level2Data& data) {
    std::vector<double> r;
    for (std::size_t i = 0; i < data.b.size(); ++i) {
      r.push_back(data.b[i].norm() + (data.area[i] + 0.5 * data.a[i]).norm());
    }
    return r;
  };
  const auto rate_s = rates(x), rate_t = rates(y);

  auto solve = [&](const std::vector<double>& sg, const std::vector<double>& tg) {
    LinearModel m = base;
    m.cs = cell_intervals(sg, triplet.time_grid);
    m.ct = cell_intervals(tg, triplet_t.time_grid);
    KernelSurface out;
    init_surface(out, sg, tg);
    out.dim = d;
    out.M = out.N = 2;
    out.f_depth = out.g_depth = 1;
    out.mass_s = cumulative_mass(sg, m.cs, rate_s);
    out.mass_t = cumulative_mass(tg, m.ct, rate_t);
    sweep(m, out);
    return out;
  };
  KernelSurface out = solve_with_options(solve, s_grid, t_grid, options);
  out.certificate = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Scalar Goursat equation

namespace {

KernelSurface solve_scalar(const MatrixXd& alpha, bool cells, const std::vector<double>& s_grid,
                           const std::vector<double>& t_grid) {
  check_grid(s_grid, "s_grid");
  check_grid(t_grid, "t_grid");
  const auto rows = static_cast<Eigen::Index>(s_grid.size() - (cells ? 1 : 0));
  const auto cols = static_cast<Eigen::Index>(t_grid.size() - (cells ? 1 : 0));
  if (alpha.rows() != rows || alpha.cols() != cols) {
    throw GridMismatch("solve_goursat_scalar: alpha has shape " + std::to_string(alpha.rows()) +
                       "x" + std::to_string(alpha.cols()) + ", expected " + std::to_string(rows) +
                       "x" + std::to_string(cols));
  }
  if (!alpha.allFinite()) throw InvalidParameter("solve_goursat_scalar: alpha must be finite");
  ScalarModel m;
  m.alpha = &alpha;
  m.cells = cells;
  KernelSurface out;
  init_surface(out, s_grid, t_grid);
  sweep(m, out);
  const double c = std::sqrt(alpha.size() > 0 ? alpha.cwiseAbs().maxCoeff() : 0.0);
  for (double s : s_grid) out.mass_s.push_back(c * s);
  for (double t : t_grid) out.mass_t.push_back(c * t);
  return out;
}

}  // namespace

KernelSurface solve_goursat_scalar(const Eigen::MatrixXd& alpha_nodes,
                                   const std::vector<double>& s_grid,
                                   const std::vector<double>& t_grid,
                                   const SolveOptions& options) {
  if (!options.richardson) return solve_scalar(alpha_nodes, false, s_grid, t_grid);
  // Node values on the refined grid are unknown.
  throw Unsupported("solve_goursat_scalar: Richardson needs a separable or cell alpha");
}

KernelSurface solve_goursat_scalar(const std::function<double(double)>& f,
                                   const std::function<double(double)>& g,
                                   const std::vector<double>& s_grid,
                                   const std::vector<double>& t_grid,
                                   const SolveOptions& options) {
  auto solve = [&](const std::vector<double>& sg, const std::vector<double>& tg) {
    VectorXd fs(static_cast<Eigen::Index>(sg.size())), gt(static_cast<Eigen::Index>(tg.size()));
    for (std::size_t p = 0; p < sg.size(); ++p) fs[static_cast<Eigen::Index>(p)] = f(sg[p]);
    for (std::size_t q = 0; q < tg.size(); ++q) gt[static_cast<Eigen::Index>(q)] = g(tg[q]);
    KernelSurface out = solve_scalar(fs * gt.transpose(), false, sg, tg);
    // |alpha| <= |f(s)| |g(t)|: masses are the integrals of |f| and |g|.
    auto mass = [](const std::vector<double>& grid, const VectorXd& vals) {
      std::vector<double> m(grid.size(), 0.0);
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double lo = std::abs(vals[static_cast<Eigen::Index>(i)]);
        const double hi = std::abs(vals[static_cast<Eigen::Index>(i + 1)]);
        m[i + 1] = m[i] + (grid[i + 1] - grid[i]) * std::max(lo, hi);
      }
      return m;
    };
    out.mass_s = mass(sg, fs);
    out.mass_t = mass(tg, gt);
    return out;
  };
  return solve_with_options(solve, s_grid, t_grid, options);
}

KernelSurface solve_goursat_scalar_cells(const Eigen::MatrixXd& alpha_cells,
                                         const std::vector<double>& s_grid,
                                         const std::vector<double>& t_grid,
                                         const SolveOptions& options) {
  auto solve = [&](const std::vector<double>& sg, const std::vector<double>& tg) {
    if (sg.size() == s_grid.size()) return solve_scalar(alpha_cells, true, sg, tg);
    // Refined grid: each coarse cell splits into 2 x 2 fine cells.
    MatrixXd fine(2 * alpha_cells.rows(), 2 * alpha_cells.cols());
    for (Eigen::Index i = 0; i < fine.rows(); ++i) {
      for (Eigen::Index j = 0; j < fine.cols(); ++j) fine(i, j) = alpha_cells(i / 2, j / 2);
    }
    return solve_scalar(fine, true, sg, tg);
  };
  return solve_with_options(solve, s_grid, t_grid, options);
}

// ---------------------------------------------------------------------------
// Certificate and special functions

double truncation_certificate(const PiecewiseVelocity& v, const PiecewiseVelocity& vt, int M,
                              int N, double s, double t) {
  if (M < 0 || N < 0) throw InvalidParameter("truncation_certificate: M, N >= 0 required");
  auto norm1 = [](const TruncatedTensor& y) { return norm_p(y, 1.0); };
  auto tail = [](int k) {
    return [k](const TruncatedTensor& y) { return norm_p(y - truncate(truncate(y, k), y.depth()), 1.0); };
  };
  const double cs = std::exp(integrate(v, 0.0, s, norm1));
  const double ct = std::exp(integrate(vt, 0.0, t, norm1));
  return cs * ct * (integrate(v, 0.0, s, tail(M)) + integrate(vt, 0.0, t, tail(N)));
}

double bessel_i0(double z) {
  if (!(z >= 0.0)) throw InvalidParameter("bessel_i0: z must be >= 0");
  const double q = 0.25 * z * z;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 100000; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

double apriori_psi(double x, double y) {
  if (!(x >= 0.0) || !(y >= 0.0)) throw InvalidParameter("apriori_psi: x, y must be >= 0");
  return std::exp(x + y) * bessel_i0(2.0 * std::sqrt(x * y));
}

}  // namespace levy_sigkernel
