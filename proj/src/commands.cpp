#include "levy_sigkernel/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "levy_sigkernel/csv.hpp"
#include "levy_sigkernel/development.hpp"
#include "levy_sigkernel/errors.hpp"
#include "levy_sigkernel/mc_oracle.hpp"
#include "levy_sigkernel/mmd.hpp"
#include "levy_sigkernel/parallel.hpp"

namespace levy_sigkernel {

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  fs::path dir = options.output_dir.empty() ? fs::path(config.output_dir) : options.output_dir;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

const GridConfig& need_grid(const ExperimentConfig& c) {
  if (!c.grid) throw ConfigError("grid", "required field is missing");
  return *c.grid;
}

const LevelsConfig& need_levels(const ExperimentConfig& c) {
  if (!c.levels) throw ConfigError("levels", "required field is missing");
  return *c.levels;
}

const LevyTriplet& second(const ExperimentConfig& c) {
  if (c.triplets.empty()) throw ConfigError("triplets", "required field is missing");
  return c.triplets.size() > 1 ? c.triplets[1] : c.triplets[0];
}

std::string fmt(double x) { return format_double(x); }

struct Pair {
  PiecewiseVelocity v, vt;
  std::vector<double> s_grid, t_grid;
};

Pair prepare(const ExperimentConfig& c) {
  const auto& g = need_grid(c);
  const auto& l = need_levels(c);
  Pair p;
  p.v = characteristic_velocity(c.triplets.at(0), l.velocity_depth);
  p.vt = characteristic_velocity(second(c), l.velocity_depth);
  p.s_grid = config_grid(g, g.s_points, p.v.time_grid, p.vt.time_grid);
  p.t_grid = config_grid(g, g.t_points, p.v.time_grid, p.vt.time_grid);
  return p;
}

KernelSurface solve(const ExperimentConfig& c, const Pair& p) {
  SolveOptions o;
  o.richardson = c.grid->richardson;
  return solve_truncated_system(p.v, p.vt, c.levels->M, c.levels->N, p.s_grid, p.t_grid, o);
}

// Smallest depth D whose development-oracle truncation error is below tol,
// limited to tensors of at most 2^16 coefficients per level.
int oracle_depth(const PiecewiseVelocity& vM, const PiecewiseVelocity& vN, int M, int N, double T,
                 double tol, double* tail) {
  const int dim = vM.dim;
  const double gv = bound_gronwall(vM, 0.0, T), gt = bound_gronwall(vN, 0.0, T);
  int D = std::max(M, N);
  for (;; ++D) {
    const double err = std::min(bound_outer_truncation(vM, 0.0, T, M, D + 1) * gt,
                                bound_outer_truncation(vN, 0.0, T, N, D + 1) * gv);
    const bool last = std::pow(static_cast<double>(dim), D + 1) > 65536.0;
    if (err < tol || last) {
      *tail = err;
      return D;
    }
  }
}

double develop_inner(const PiecewiseVelocity& v, const PiecewiseVelocity& vt, double T, int D) {
  return inner_product(develop(v, 0.0, T, D), develop(vt, 0.0, T, D));
}

struct Check {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass() const { return measured <= bound; }
};

std::string tag(std::size_t i) { return "triplets[" + std::to_string(i) + "]"; }

}  // namespace

std::vector<double> config_grid(const GridConfig& grid, int points,
                                const std::vector<double>& breaks_a,
                                const std::vector<double>& breaks_b) {
  std::vector<double> br(breaks_a);
  br.insert(br.end(), breaks_b.begin(), breaks_b.end());
  return make_grid(grid.T, points - 1, br);
}

void write_surface_csv(std::ostream& out, const KernelSurface& k) {
  std::vector<std::string> head{"s", "t", "w"};
  for (int n = 0; n <= k.f_depth; ++n) head.push_back("f" + std::to_string(n));
  for (int n = 0; n <= k.g_depth; ++n) head.push_back("g" + std::to_string(n));
  write_csv_row(out, head);
  std::vector<std::string> row;
  for (std::size_t p = 0; p < k.n_s(); ++p) {
    for (std::size_t q = 0; q < k.n_t(); ++q) {
      row = {fmt(k.s_grid[p]), fmt(k.t_grid[q]), fmt(k.w_at(p, q))};
      if (k.f_depth >= 0) {
        for (double x : level_norms(k.f_at(p, q)).values) row.push_back(fmt(x));
      }
      if (k.g_depth >= 0) {
        for (double x : level_norms(k.g_at(p, q)).values) row.push_back(fmt(x));
      }
      write_csv_row(out, row);
    }
  }
}

CommandResult cmd_kernel(const ExperimentConfig& c, const RunOptions& options) {
  if (c.triplets.empty() || c.triplets.size() > 2) throw ConfigError("triplets", "kernel needs one or two triplets");
  const Pair p = prepare(c);
  const KernelSurface k = solve(c, p);
  const fs::path dir = output_dir(c, options);
  CommandResult r;
  {
    auto out = open(dir / "kernel.csv");
    write_surface_csv(out, k);
    r.files.push_back(dir / "kernel.csv");
  }
  {
    auto out = open(dir / "certificate.txt");
    out << "M " << c.levels->M << "\n"
        << "N " << c.levels->N << "\n"
        << "value " << fmt(k.value()) << "\n"
        << "certificate " << fmt(k.certificate.value_or(0.0)) << "\n"
        << "apriori_ratio " << fmt(k.apriori_ratio()) << "\n"
        << "richardson " << (k.richardson ? 1 : 0) << "\n";
    r.files.push_back(dir / "certificate.txt");
  }
  return r;
}

CommandResult cmd_mmd(const ExperimentConfig& c, const RunOptions& options) {
  if (!c.ensemble) throw ConfigError("ensemble", "required field is missing");
  if (!c.wiener) throw ConfigError("wiener", "required field is missing");
  const auto& g = need_grid(c);
  if (std::abs(c.ensemble->horizon() - g.T) > 1e-12 || std::abs(c.wiener->horizon() - g.T) > 1e-12) {
    throw ConfigError("grid.T", "must equal the horizon of ensemble and wiener");
  }
  MmdOptions o;
  o.solve.richardson = g.richardson;
  o.threads = options.threads;
  const auto grid = mmd_grid(*c.ensemble, *c.wiener, g.s_points - 1);
  const MmdReport report = mmd_to_wiener(*c.ensemble, *c.wiener, grid, o);
  const fs::path dir = output_dir(c, options);
  auto out = open(dir / "mmd.csv");
  write_mmd_csv(out, report);
  return {0, {dir / "mmd.csv"}};
}

CommandResult cmd_validate(const ExperimentConfig& c, const RunOptions& options) {
  if (c.triplets.empty() || c.triplets.size() > 2) throw ConfigError("triplets", "validate needs one or two triplets");
  const auto& l = need_levels(c);
  const Pair p = prepare(c);
  const double T = need_grid(c).T;
  const KernelSurface k = solve(c, p);
  const double pde = k.value();
  const double cert = k.certificate.value_or(0.0);
  std::vector<Check> checks;

  // Development oracle for the truncated system.
  const auto vM = truncate(p.v, l.M), vN = truncate(p.vt, l.N);
  double tail = 0.0;
  const int D = oracle_depth(vM, vN, l.M, l.N, T, 1e-10, &tail);
  const double dev = develop_inner(vM, vN, T, D);
  checks.push_back({"develop_vs_solver", std::abs(pde - dev), 1e-3 * std::abs(dev) + tail});

  // Monte Carlo estimate of the truncated kernel against the solver.
  int Dmc = l.velocity_depth;
  while (Dmc > 1 && std::pow(static_cast<double>(p.v.dim), Dmc) > 4096.0) --Dmc;
  SimulationOptions so;
  so.steps_per_interval = c.mc.steps;
  so.seed = options.seed.value_or(c.mc.seed);
  so.threads = options.threads;
  const KernelEstimate mc = estimate_kernel(c.triplets[0], second(c), T, Dmc, c.mc.n_paths, so);
  double mc_tail = 0.0;
  for (int n = Dmc + 1; n <= Dmc + 400; ++n) {
    const double term = bound_level(p.v, 0.0, T, n) * bound_level(p.vt, 0.0, T, n);
    mc_tail += term;
    if (term < 1e-17 * mc_tail) break;
  }
  checks.push_back({"mc_vs_solver", std::abs(mc.value - pde), 3.0 * mc.se + cert + mc_tail + 1e-3 * std::abs(pde)});

  // Development estimates on each distinct velocity.
  const int B = std::min(c.bounds.max_depth, std::max(1, static_cast<int>(std::floor(std::log(65536.0) / std::log(std::max(2, p.v.dim))))));
  std::vector<std::pair<std::string, const PiecewiseVelocity*>> vs{{tag(0), &p.v}};
  if (c.triplets.size() > 1) vs.push_back({tag(1), &p.vt});
  const double slack = 1.0 + 1e-12;
  for (const auto& [name, vp] : vs) {
    const auto& v = *vp;
    const auto S = develop(v, 0.0, T, B);
    const auto ln = level_norms(S).values;
    double worst = 0.0;
    for (int n = 0; n <= B; ++n) {
      const double b = bound_level(v, 0.0, T, n);
      worst = std::max(worst, b > 0 ? ln[static_cast<std::size_t>(n)] / b : (ln[static_cast<std::size_t>(n)] > 0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    checks.push_back({name + ".level_ratio", worst, slack});
    checks.push_back({name + ".gronwall", norm_p(S, 1.0), bound_gronwall(v, 0.0, T) * slack});
    for (int n = 1; n < std::min(B, v.depth); ++n) {
      const auto Sn = develop(truncate(v, n), 0.0, T, B);
      checks.push_back({name + ".inner_truncation_" + std::to_string(n), norm_p(S - Sn, 1.0),
                        bound_inner_truncation(v, 0.0, T, n) * slack});
      const auto tailM = norm_p(Sn - truncate(truncate(Sn, n), B), 1.0);
      checks.push_back({name + ".outer_truncation_" + std::to_string(n), tailM,
                        bound_outer_truncation(v, 0.0, T, n, n + 1) * slack});
    }
  }
  if (c.triplets.size() > 1) {
    const auto diff = develop(p.v, 0.0, T, B) - develop(p.vt, 0.0, T, B);
    checks.push_back({"lipschitz", norm_p(diff, 1.0), bound_lipschitz(p.v, p.vt, 0.0, T) * slack});
  }

  const fs::path dir = output_dir(c, options);
  auto out = open(dir / "validate.csv");
  write_csv_row(out, {"check", "measured", "bound", "pass"});
  CommandResult r;
  for (const auto& ch : checks) {
    write_csv_row(out, {ch.name, fmt(ch.measured), fmt(ch.bound), ch.pass() ? "1" : "0"});
    if (!ch.pass()) r.exit_code = 1;
  }
  r.files.push_back(dir / "validate.csv");
  return r;
}

CommandResult cmd_bounds(const ExperimentConfig& c, const RunOptions& options) {
  if (c.triplets.empty()) throw ConfigError("triplets", "required field is missing");
  const auto& l = need_levels(c);
  const int B = c.bounds.max_depth;
  const fs::path dir = output_dir(c, options);
  CommandResult r;

  std::vector<PiecewiseVelocity> vs;
  for (const auto& t : c.triplets) vs.push_back(characteristic_velocity(t, std::max(B, l.velocity_depth)));
  std::vector<std::string> table;
  {
    auto out = open(dir / "bounds.csv");
    write_csv_row(out, {"triplet", "quantity", "n", "exact", "bound"});
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const auto& v = vs[i];
      const double T = v.horizon();
      const std::string id = std::to_string(i);
      const auto S = develop(v, 0.0, T, B);
      const auto ln = level_norms(S).values;
      for (int n = 0; n <= B; ++n) {
        write_csv_row(out, {id, "level", std::to_string(n), fmt(ln[static_cast<std::size_t>(n)]), fmt(bound_level(v, 0.0, T, n))});
      }
      write_csv_row(out, {id, "gronwall", std::to_string(B), fmt(norm_p(S, 1.0)), fmt(bound_gronwall(v, 0.0, T))});
      for (int n = 1; n < B && n < v.depth; ++n) {
        const auto Sn = develop(truncate(v, n), 0.0, T, B);
        write_csv_row(out, {id, "inner_truncation", std::to_string(n), fmt(norm_p(S - Sn, 1.0)),
                            fmt(bound_inner_truncation(v, 0.0, T, n))});
      }
      const int M = std::min(l.M, B);
      const auto SM = develop(truncate(v, M), 0.0, T, B);
      for (int m = M; m < B; ++m) {
        const double tailm = norm_p(SM - truncate(truncate(SM, m), B), 1.0);
        write_csv_row(out, {id, "outer_truncation", std::to_string(m + 1), fmt(tailm),
                            fmt(bound_outer_truncation(v, 0.0, T, M, m + 1))});
      }
      for (std::size_t j = i + 1; j < vs.size(); ++j) {
        if (vs[j].dim != v.dim) continue;
        const double T2 = std::min(T, vs[j].horizon());
        const auto diff = develop(v, 0.0, T2, B) - develop(vs[j], 0.0, T2, B);
        write_csv_row(out, {id + "-" + std::to_string(j), "lipschitz", std::to_string(B), fmt(norm_p(diff, 1.0)),
                            fmt(bound_lipschitz(v, vs[j], 0.0, T2))});
      }
    }
    r.files.push_back(dir / "bounds.csv");
  }
  {
    auto out = open(dir / "remainders.csv");
    write_csv_row(out, {"mode", "rho", "m", "exact", "asymptotic", "terms"});
    auto emit = [&](const char* mode, RemainderMode rm, const std::vector<double>& rhos) {
      for (double rho : rhos) {
        for (int m : c.bounds.remainder_m) {
          const auto d = remainder_diagnostics(rho, m, rm);
          write_csv_row(out, {mode, fmt(rho), std::to_string(m), fmt(d.exact), fmt(d.asymptotic), std::to_string(d.terms)});
        }
      }
    };
    emit("factorial", RemainderMode::FactorialJumps, c.bounds.rho_factorial);
    emit("geometric", RemainderMode::GeometricJumps, c.bounds.rho_geometric);
    r.files.push_back(dir / "remainders.csv");
  }
  bool any_gaussian = false;
  for (const auto& t : c.triplets) {
    for (const auto& iv : t.intervals) any_gaussian |= iv.jumps.kind == JumpKind::GaussianCP;
  }
  if (any_gaussian) {
    auto out = open(dir / "gaussian_tail.csv");
    // partial_tail sums the stored velocity levels above 2m only, a lower
    // bound on the full tail integral.
    write_csv_row(out, {"triplet", "interval", "m", "partial_tail", "bound"});
    for (std::size_t i = 0; i < c.triplets.size(); ++i) {
      const auto& t = c.triplets[i];
      for (std::size_t k = 0; k < t.intervals.size(); ++k) {
        const auto& iv = t.intervals[k];
        if (iv.jumps.kind != JumpKind::GaussianCP) continue;
        LevyTriplet only = t;
        for (auto& other : only.intervals) other = TripletInterval{TruncatedTensor(t.dim, t.state_depth), Eigen::MatrixXd::Zero(t.dim, t.dim), {}};
        only.intervals[k].jumps = iv.jumps;
        const auto v = characteristic_velocity(only, B);
        const double len = t.time_grid[k + 1] - t.time_grid[k];
        for (int m = 0; 2 * m < B; ++m) {
          const double partial = integrate(v, 0.0, v.horizon(), [&](const TruncatedTensor& y) {
            return norm_p(y - truncate(truncate(y, 2 * m), B), 1.0);
          });
          write_csv_row(out, {std::to_string(i), std::to_string(k), std::to_string(m), fmt(partial),
                              fmt(gaussian_jump_tail_bound(iv.jumps.covariance, iv.jumps.intensity, len, m))});
        }
      }
    }
    r.files.push_back(dir / "gaussian_tail.csv");
  }
  return r;
}

CommandResult run_experiment(const ExperimentConfig& c, const RunOptions& options) {
  if (c.experiment == "kernel") return cmd_kernel(c, options);
  if (c.experiment == "mmd") return cmd_mmd(c, options);
  if (c.experiment == "validate") return cmd_validate(c, options);
  if (c.experiment == "bounds") return cmd_bounds(c, options);
  throw ConfigError("experiment", "must be one of kernel, mmd, validate, bounds");
}

}  // namespace levy_sigkernel
