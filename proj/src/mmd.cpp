#include "levy_sigkernel/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <ostream>

#include "levy_sigkernel/csv.hpp"
#include "levy_sigkernel/development.hpp"
#include "levy_sigkernel/errors.hpp"
#include "levy_sigkernel/parallel.hpp"

namespace levy_sigkernel {

namespace {

constexpr double kRadicandTolerance = 1e-8;

void check_grid(const std::vector<double>& grid, const std::string& what) {
  if (grid.size() < 2 || grid.front() != 0.0) {
    throw InvalidParameter(what + ": time grid must start at 0 and have >= 2 points");
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i + 1] > grid[i])) throw InvalidParameter(what + ": time grid must be strictly increasing");
  }
}

void check_ensemble_wiener(const AugmentedPathEnsemble& e, const WienerSpec& w) {
  e.validate();
  w.validate();
  if (e.dim != w.dim) throw DimMismatch("mmd: ensemble and Wiener dimensions differ");
  if (std::abs(e.horizon() - w.horizon()) > 1e-12 * std::max(1.0, e.horizon())) {
    throw GridMismatch("mmd: ensemble and Wiener horizons differ");
  }
}

}  // namespace

void AugmentedPathEnsemble::validate() const {
  if (dim < 1) throw InvalidParameter("ensemble: dim must be >= 1");
  check_grid(time_grid, "ensemble");
  if (paths.empty()) throw InvalidParameter("ensemble: needs at least one path");
  const std::size_t n = time_grid.size() - 1;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto& p = paths[k];
    const std::string name = "ensemble path " + std::to_string(k);
    if (p.b.size() != n || p.area.size() != n) {
      throw InvalidParameter(name + ": expected " + std::to_string(n) + " intervals");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (p.b[i].size() != dim || p.area[i].rows() != dim || p.area[i].cols() != dim) {
        throw DimMismatch(name + ": wrong dimension on interval " + std::to_string(i));
      }
      const double scale = std::max(1.0, p.area[i].cwiseAbs().maxCoeff());
      if ((p.area[i] + p.area[i].transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidParameter(name + ": area derivative is not antisymmetric");
      }
    }
  }
}

void WienerSpec::validate() const {
  check_grid(time_grid, "wiener");
  if (covariance.size() != time_grid.size() - 1) {
    throw InvalidParameter("wiener: one covariance per interval required");
  }
  wiener_triplet(*this).validate();
}

LevyTriplet path_triplet(const AugmentedPathEnsemble& ensemble, std::size_t k) {
  if (k >= ensemble.paths.size()) throw OutOfRange("path index " + std::to_string(k));
  const int d = ensemble.dim;
  const auto& p = ensemble.paths[k];
  std::vector<TruncatedTensor> drifts;
  for (std::size_t i = 0; i < p.b.size(); ++i) {
    TruncatedTensor x(d, 2);
    for (int a = 0; a < d; ++a) {
      x.level(1)[static_cast<std::size_t>(a)] = p.b[i][a];
      for (int c = 0; c < d; ++c) x.level(2)[static_cast<std::size_t>(a * d + c)] = p.area[i](a, c);
    }
    drifts.push_back(x);
  }
  return deterministic_triplet(d, 2, ensemble.time_grid, drifts);
}

LevyTriplet wiener_triplet(const WienerSpec& wiener) {
  LevyTriplet t;
  t.dim = wiener.dim;
  t.state_depth = 1;
  t.time_grid = wiener.time_grid;
  for (const auto& a : wiener.covariance) {
    TripletInterval iv;
    iv.drift = TruncatedTensor(wiener.dim, 1);
    iv.diffusion = a;
    t.intervals.push_back(iv);
  }
  return t;
}

std::vector<double> mmd_grid(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                             int steps) {
  check_ensemble_wiener(ensemble, wiener);
  std::vector<double> breaks = ensemble.time_grid;
  breaks.insert(breaks.end(), wiener.time_grid.begin(), wiener.time_grid.end());
  return make_grid(ensemble.horizon(), steps, breaks);
}

KernelSurface wiener_kernel(const WienerSpec& wiener, const std::vector<double>& grid,
                            const SolveOptions& options) {
  wiener.validate();
  const auto cells = cell_intervals(grid, wiener.time_grid);
  const auto n = static_cast<Eigen::Index>(cells.size());
  Eigen::MatrixXd alpha(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& a = wiener.covariance[cells[static_cast<std::size_t>(i)]];
      const auto& b = wiener.covariance[cells[static_cast<std::size_t>(j)]];
      alpha(i, j) = 0.25 * a.cwiseProduct(b).sum();
    }
  }
  return solve_goursat_scalar_cells(alpha, grid, grid, options);
}

KernelSurface cross_kernel(const AugmentedPathEnsemble& ensemble, std::size_t k,
                           const WienerSpec& wiener, const std::vector<double>& grid,
                           const SolveOptions& options) {
  check_ensemble_wiener(ensemble, wiener);
  return solve_level2_system(path_triplet(ensemble, k), wiener_triplet(wiener), grid, grid, options);
}

KernelSurface pair_kernel(const AugmentedPathEnsemble& ensemble, std::size_t j, std::size_t k,
                          const std::vector<double>& grid, const SolveOptions& options) {
  ensemble.validate();
  return solve_level2_system(path_triplet(ensemble, j), path_triplet(ensemble, k), grid, grid,
                             options);
}

MmdReport mmd_to_wiener(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                        const std::vector<double>& grid, const MmdOptions& options) {
  check_ensemble_wiener(ensemble, wiener);
  const std::size_t m = ensemble.paths.size();
  // Job 0 is u_alpha, jobs 1..m the cross kernels, then pairs j <= k.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j; k < m; ++k) pairs.emplace_back(j, k);
  }
  const std::size_t n_jobs = 1 + m + pairs.size();
  std::vector<double> values(n_jobs, 0.0), ratios(n_jobs, 0.0);
  parallel_for(n_jobs, options.threads, [&](std::size_t job) {
    KernelSurface s;
    if (job == 0) {
      s = wiener_kernel(wiener, grid, options.solve);
    } else if (job <= m) {
      s = cross_kernel(ensemble, job - 1, wiener, grid, options.solve);
    } else {
      const auto [j, k] = pairs[job - 1 - m];
      s = pair_kernel(ensemble, j, k, grid, options.solve);
    }
    values[job] = s.value();
    ratios[job] = s.apriori_ratio();
  });

  MmdReport r;
  r.u_alpha = values[0];
  r.v.assign(values.begin() + 1, values.begin() + 1 + static_cast<std::ptrdiff_t>(m));
  double sum_v = 0.0, sum_w = 0.0;
  for (double x : r.v) sum_v += x;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double x = values[1 + m + p];
    r.w.push_back({pairs[p].first, pairs[p].second, x});
    sum_w += pairs[p].first == pairs[p].second ? x : 2.0 * x;
  }
  const double md = static_cast<double>(m);
  r.radicand = r.u_alpha - 2.0 / md * sum_v + sum_w / (md * md);
  r.mmd2 = r.radicand;
  if (r.radicand < 0.0) {
    const double scale = std::max(1.0, std::abs(r.u_alpha));
    if (r.radicand < -kRadicandTolerance * scale) {
      throw NumericalInconsistency("mmd: squared MMD is negative (" + format_double(r.radicand) +
                                   "); refine the grid");
    }
    r.clipped = true;
    r.mmd2 = 0.0;
    std::cerr << "warning: squared MMD " << r.radicand << " clipped to 0\n";
  }
  r.mmd = std::sqrt(r.mmd2);
  r.apriori_ratio = *std::max_element(ratios.begin(), ratios.end());
  return r;
}

double mmd2_by_development(const AugmentedPathEnsemble& ensemble, const WienerSpec& wiener,
                           int depth) {
  check_ensemble_wiener(ensemble, wiener);
  const int d = ensemble.dim;
  const double T = ensemble.horizon();
  TruncatedTensor diff(d, depth);
  for (std::size_t k = 0; k < ensemble.paths.size(); ++k) {
    diff += develop(characteristic_velocity(path_triplet(ensemble, k), 2), 0.0, T, depth);
  }
  diff /= static_cast<double>(ensemble.paths.size());
  diff -= develop(characteristic_velocity(wiener_triplet(wiener), 2), 0.0, T, depth);
  return inner_product(diff, diff);
}

void write_mmd_csv(std::ostream& out, const MmdReport& report) {
  write_csv_row(out, {"kind", "j", "k", "value"});
  write_csv_row(out, {"u", "", "", format_double(report.u_alpha)});
  for (std::size_t k = 0; k < report.v.size(); ++k) {
    write_csv_row(out, {"v", std::to_string(k), "", format_double(report.v[k])});
  }
  for (const auto& p : report.w) {
    write_csv_row(out, {"w", std::to_string(p.j), std::to_string(p.k), format_double(p.value)});
  }
  write_csv_row(out, {"mmd", "", "", format_double(report.mmd)});
  write_csv_row(out, {"mmd2", "", "", format_double(report.mmd2)});
}

}  // namespace levy_sigkernel
