// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "levy_sigkernel/characteristics.hpp"
#include "levy_sigkernel/development.hpp"
#include "levy_sigkernel/kernel_solver.hpp"
#include "levy_sigkernel/mc_oracle.hpp"
#include "levy_sigkernel/mmd.hpp"
#include "levy_sigkernel/tensor_algebra.hpp"
#include "test_support.hpp"

using namespace levy_sigkernel;

namespace {

// 1
constexpr int kBesselCells = 512;
constexpr double kBesselRelTol = 1e-4;
constexpr double kBesselSeconds = 5.0;
// 2
constexpr double kBrownianAbsTol = 1e-4;
// 3
constexpr int kOracleCases = 20;
constexpr int kOracleCells = 256;
constexpr double kOracleRelTol = 1e-3;
constexpr double kOracleTailTol = 1e-8;
constexpr double kMinOrder = 1.9;
// 4
constexpr int kCertificateCells = 256;
// 5
constexpr int kBoundCases = 50;
constexpr double kEqualityTol = 1e-12;
// 6
constexpr std::size_t kFawcettPaths = 100000;
constexpr double kSigmas = 3.0;
constexpr double kFawcettSeconds = 60.0;
// 7
constexpr double kMmdRelTol = 1e-2;
constexpr double kPureAreaTol = 1e-10;
// 8
constexpr int kAlgebraCases = 1000;
constexpr double kAlgebraTol = 1e-12;
// 9
constexpr std::size_t kMgfSamples = 1000000;
constexpr double kSqrt2Tol = 1e-12;

// Surfaces gathered for the a priori bound check.
std::vector<std::pair<std::string, double>> g_apriori;

void record_apriori(const std::string& name, double ratio) { g_apriori.emplace_back(name, ratio); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail_if(Outcome& o, bool bad) {
  if (bad) o.pass = false;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome bessel_closed_form() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = make_grid(1.0, kBesselCells);
  const auto one = [](double) { return 1.0; };
  const auto u = solve_goursat_scalar(one, one, grid, grid);
  const double rel1 = std::abs(u.value() - bessel_i0(2.0)) / bessel_i0(2.0);
  record_apriori("alpha=1", u.apriori_ratio());

  // F = s^2, G = t: alpha = F'(s) G'(t) = 2s, u = I0(2 s sqrt(t)).
  const auto sep = solve_goursat_scalar([](double s) { return 2.0 * s; }, one, grid, grid);
  double rel2 = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double exact = bessel_i0(2.0 * grid[p] * std::sqrt(grid[q]));
      rel2 = std::max(rel2, std::abs(sep.w_at(p, q) - exact) / exact);
    }
  }
  record_apriori("separable", sep.apriori_ratio());
  const double secs = seconds_since(t0);
  fail_if(o, !(rel1 <= kBesselRelTol) || !(rel2 <= kBesselRelTol) || !(secs < kBesselSeconds));
  o.detail = "rel(1,1)=" + num(rel1) + " separable max rel=" + num(rel2) + " time=" + num(secs) + "s";
  return o;
}

Outcome brownian_kernel() {
  Outcome o;
  const auto bm = brownian_triplet(Eigen::MatrixXd::Identity(1, 1), 1.0);
  const auto grid = make_grid(1.0, kBesselCells);
  const auto k = solve_level2_system(bm, bm, grid, grid);
  const double err = std::abs(k.value() - bessel_i0(1.0));
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (std::size_t q = 0; q < grid.size(); ++q) {
      worst = std::max(worst, std::abs(k.w_at(p, q) - bessel_i0(std::sqrt(grid[p] * grid[q]))));
    }
  }
  record_apriori("brownian", k.apriori_ratio());
  fail_if(o, !(err <= kBrownianAbsTol) || !(worst <= kBrownianAbsTol));
  o.detail = "|u(1,1)-I0(1)|=" + num(err) + " max node err=" + num(worst);
  return o;
}

// Piecewise-constant velocity on quarter breakpoints; each value is a shared
// direction plus noise, rescaled to the given 1-norm times U(0.5, 1).
PiecewiseVelocity correlated_velocity(std::mt19937_64& rng, int d, int depth, int intervals,
                                      double scale, const TruncatedTensor& base) {
  PiecewiseVelocity v;
  v.dim = d;
  v.depth = depth;
  std::vector<double> br{0.25, 0.5, 0.75};
  std::shuffle(br.begin(), br.end(), rng);
  br.resize(static_cast<std::size_t>(intervals - 1));
  std::sort(br.begin(), br.end());
  v.time_grid.push_back(0.0);
  v.time_grid.insert(v.time_grid.end(), br.begin(), br.end());
  v.time_grid.push_back(1.0);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (int i = 0; i < intervals; ++i) {
    auto y = test_support::random_tensor(rng, d, depth, 0.5, true) + base;
    v.values.push_back(y * (scale * u(rng) / norm_p(y, 1.0)));
  }
  v.validate();
  return v;
}

Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pieces(1, 4);
  double worst_rel = 0.0, min_order = 1e9;
  int max_depth = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    // d = 3 with M = 3 would need oracle depth >= 15 (3^15 coefficients per
    // level), so the third dimension is exercised with M <= 2.
    static constexpr int kShapes[][2] = {{1, 1}, {2, 1}, {3, 1}, {1, 2}, {2, 2}, {3, 2}, {1, 3}, {2, 3}};
    const int d = kShapes[c % 8][0], M = kShapes[c % 8][1];
    const double scale = M == 1 ? 0.8 : M == 2 ? (d == 3 ? 0.2 : 0.6) : (d == 1 ? 0.6 : 0.2);
    const auto base = test_support::random_tensor(rng, d, M, 1.0, true);
    const auto v = correlated_velocity(rng, d, M, pieces(rng), scale, base);
    const auto vt = correlated_velocity(rng, d, M, pieces(rng), scale, base);
    int D = M;
    while (bound_outer_truncation(v, 0.0, 1.0, M, D + 1) >= kOracleTailTol ||
           bound_outer_truncation(vt, 0.0, 1.0, M, D + 1) >= kOracleTailTol) {
      ++D;
    }
    max_depth = std::max(max_depth, D);
    const double oracle = inner_product(develop(v, 0.0, 1.0, D), develop(vt, 0.0, 1.0, D));
    std::vector<double> errs;
    for (int n : {kOracleCells / 2, kOracleCells}) {
      const auto grid = make_grid(1.0, n);
      const auto k = solve_truncated_system(v, vt, M, M, grid, grid);
      errs.push_back(std::abs(k.value() - oracle));
      if (n == kOracleCells) record_apriori("oracle case " + std::to_string(c), k.apriori_ratio());
    }
    const double rel = errs[1] / std::abs(oracle);
    const double order = std::log2(errs[0] / errs[1]);
    worst_rel = std::max(worst_rel, rel);
    min_order = std::min(min_order, order);
    fail_if(o, !(rel <= kOracleRelTol) || !(order >= kMinOrder));
  }
  o.detail = "max rel err=" + num(worst_rel) + " min order (128->256)=" + num(min_order) +
             " max oracle depth=" + std::to_string(max_depth);
  return o;
}

LevyTriplet gaussian_cp() {
  LevyTriplet t = zero_triplet(1, 1.0, 1);
  t.intervals[0].jumps.kind = JumpKind::GaussianCP;
  t.intervals[0].jumps.intensity = 1.0;
  t.intervals[0].jumps.covariance = Eigen::MatrixXd::Identity(1, 1);
  t.validate();
  return t;
}

Outcome truncation_certificate_decay() {
  Outcome o;
  const auto tr = gaussian_cp();
  const auto v = characteristic_velocity(tr, 40);
  const double ref = inner_product(develop(v, 0.0, 1.0, 80), develop(v, 0.0, 1.0, 80));
  const auto grid = make_grid(1.0, kCertificateCells);
  std::vector<double> certs;
  for (int M : {2, 4, 6}) {
    const auto k = solve_truncated_system(v, v, M, M, grid, grid, {.richardson = true});
    const double err = std::abs(ref - k.value());
    const double cert = *k.certificate;
    certs.push_back(cert);
    record_apriori("certificate M=" + std::to_string(M), k.apriori_ratio());
    fail_if(o, !(err <= cert));
    o.detail += "M=" + std::to_string(M) + ": err=" + num(err) + " cert=" + num(cert) + "; ";
  }
  const double r1 = certs[1] / certs[0], r2 = certs[2] / certs[1];
  fail_if(o, !(certs[1] < certs[0] && certs[2] < certs[1] && r2 < r1));
  o.detail += "ratios " + num(r1) + " > " + num(r2);
  return o;
}

PiecewiseVelocity random_velocity(std::mt19937_64& rng, int d, int depth, int intervals, double scale) {
  PiecewiseVelocity v;
  v.dim = d;
  v.depth = depth;
  v.time_grid.push_back(0.0);
  for (int i = 1; i < intervals; ++i) v.time_grid.push_back(static_cast<double>(i) / intervals);
  v.time_grid.push_back(1.0);
  for (int i = 0; i < intervals; ++i) {
    auto y = test_support::random_tensor(rng, d, depth, 1.0, true);
    v.values.push_back(y * (scale / norm_p(y, 1.0)));
  }
  v.validate();
  return v;
}

// Upper estimate of sum_{n > D} |X^(n)| from the level bounds.
double level_tail(const PiecewiseVelocity& v, int D) {
  double tail = 0.0;
  for (int n = D + 1; n <= D + 200; ++n) {
    const double b = bound_level(v, 0.0, 1.0, n);
    tail += b;
    if (b < 1e-18 * tail) break;
  }
  return tail;
}

Outcome bound_suite() {
  Outcome o;
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> scale(0.3, 1.2);
  int violations = 0;
  double tightest = 0.0;  // largest measured / bound
  const auto check = [&](double measured, double bound) {
    if (!(measured <= bound * (1.0 + 1e-12))) ++violations;
    if (bound > 0.0) tightest = std::max(tightest, measured / bound);
  };
  for (int c = 0; c < kBoundCases; ++c) {
    const int d = 1 + c % 3;
    const int D = d == 3 ? 9 : 14;
    const auto v = random_velocity(rng, d, 3, 1 + c % 4, scale(rng));
    const auto w = random_velocity(rng, d, 3, 1 + (c / 4) % 4, scale(rng));
    const auto S = develop(v, 0.0, 1.0, D);
    const auto Sw = develop(w, 0.0, 1.0, D);
    // Levels above D are accounted for by their level bounds, so every
    // measured value below is an upper estimate of the exact quantity.
    const auto ln = level_norms(S).values;
    for (int n = 0; n <= D; ++n) check(ln[static_cast<std::size_t>(n)], bound_level(v, 0.0, 1.0, n));
    check(norm_p(S, 1.0) + level_tail(v, D), bound_gronwall(v, 0.0, 1.0));
    check(norm_p(S - Sw, 1.0) + level_tail(v, D) + level_tail(w, D), bound_lipschitz(v, w, 0.0, 1.0));
    for (int N = 1; N <= 2; ++N) {
      const auto vN = truncate(v, N);
      const auto SN = develop(vN, 0.0, 1.0, D);
      check(norm_p(S - SN, 1.0) + level_tail(v, D) + level_tail(vN, D), bound_inner_truncation(v, 0.0, 1.0, N));
      for (int m = N; m <= 6; ++m) {
        const double tail = norm_p(SN - truncate(truncate(SN, m - 1), D), 1.0) + level_tail(vN, D);
        check(tail, bound_outer_truncation(v, 0.0, 1.0, N, m));
      }
    }
  }
  // d = 1, non-negative constant velocity: the level bound is attained.
  double worst_eq = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 10; ++c) {
    TruncatedTensor y(1, 3);
    for (int n = 1; n <= 3; ++n) y.level(n)[0] = u(rng);
    const double T = 0.5 + u(rng);
    const auto v = constant_velocity(y, T);
    const auto ln = level_norms(develop(v, 0.0, T, 12)).values;
    for (int n = 0; n <= 12; ++n) {
      const double b = bound_level(v, 0.0, T, n);
      worst_eq = std::max(worst_eq, std::abs(ln[static_cast<std::size_t>(n)] - b) / std::max(1.0, b));
    }
  }
  fail_if(o, violations > 0 || !(worst_eq <= kEqualityTol));
  o.detail = "violations=" + std::to_string(violations) + " max measured/bound=" + num(tightest) +
             " d=1 equality err=" + num(worst_eq);
  return o;
}

Outcome fawcett_monte_carlo() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto bm = brownian_triplet(Eigen::MatrixXd::Identity(1, 1), 1.0);
  SimulationOptions opt;
  opt.seed = 20240601;
  const auto est = estimate_expected_signature(bm, 1.0, 4, kFawcettPaths, opt);
  const auto exact = exp_tensor(TruncatedTensor::basis(1, 4, {1, 1}, 0.5));
  double worst_z = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double diff = std::abs(est.mean.data()[i] - exact.data()[i]);
    const double se = est.se.data()[i];
    if (se == 0.0) {
      fail_if(o, diff != 0.0);
    } else {
      worst_z = std::max(worst_z, diff / se);
    }
  }
  const auto k = estimate_kernel(bm, bm, 1.0, 8, kFawcettPaths, opt);
  const double kz = std::abs(k.value - bessel_i0(1.0)) / k.se;
  const double secs = seconds_since(t0);
  fail_if(o, !(worst_z <= kSigmas) || !(kz <= kSigmas) || !(secs < kFawcettSeconds));
  o.detail = "max |z| signature=" + num(worst_z) + " kernel z=" + num(kz) + " (" + num(k.value) + " +- " +
             num(k.se) + ") time=" + num(secs) + "s";
  return o;
}

Outcome mmd_assembly() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto path = [&](bool with_b) {
    AugmentedPath p;
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
      if (with_b) b << u(rng), u(rng);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
      a(0, 1) = u(rng);
      a(1, 0) = -a(0, 1);
      p.b.push_back(b);
      p.area.push_back(a);
    }
    return p;
  };
  AugmentedPathEnsemble e;
  e.dim = 2;
  e.time_grid = {0.0, 0.5, 1.0};
  e.paths = {path(true), path(true)};
  WienerSpec w;
  w.dim = 2;
  w.time_grid = {0.0, 0.3, 1.0};
  Eigen::MatrixXd s = Eigen::MatrixXd::Random(2, 2);
  w.covariance = {s * s.transpose(), Eigen::MatrixXd::Identity(2, 2) * 0.5};
  const auto grid = mmd_grid(e, w, 64);
  const auto r = mmd_to_wiener(e, w, grid, {.solve = {.richardson = true}});
  const double direct = mmd2_by_development(e, w, 12);
  const double rel = std::abs(r.mmd2 - direct) / direct;
  record_apriori("mmd", r.apriori_ratio);

  AugmentedPathEnsemble area = e;
  area.paths = {path(false), path(false)};
  double worst = 0.0;
  for (std::size_t k = 0; k < area.paths.size(); ++k) {
    const auto v = cross_kernel(area, k, w, grid);
    for (double x : v.w) worst = std::max(worst, std::abs(x - 1.0));
    record_apriori("pure area v" + std::to_string(k), v.apriori_ratio());
  }
  fail_if(o, !(rel <= kMmdRelTol) || !(worst <= kPureAreaTol));
  o.detail = "MMD^2=" + num(r.mmd2) + " direct=" + num(direct) + " rel=" + num(rel) +
             " pure-area max|v-1|=" + num(worst);
  return o;
}

Outcome algebra_properties() {
  Outcome o;
  std::mt19937_64 rng(8);
  double e_dual = 0.0, e_prop = 0.0, e_exp = 0.0, e_dil = 0.0;
  int young_violations = 0;
  std::uniform_real_distribution<double> lam(-2.0, 2.0);
  for (int i = 0; i < kAlgebraCases; ++i) {
    const int d = 1 + i % 3;
    const int depth = 2 + i % 3;
    const auto x = test_support::random_tensor(rng, d, depth);
    const auto y = test_support::random_tensor(rng, d, depth);
    const auto z = test_support::random_tensor(rng, d, 2 * depth);
    const double lhs = inner_product(z, tensor_mul(x, y, 2 * depth));
    e_dual = std::max({e_dual, std::abs(lhs - inner_product(adjoint_left(x, z), y)),
                       std::abs(lhs - inner_product(adjoint_right(y, z), x))});

    const int n = 1 + i % 3, k = 1 + (i / 3) % n;
    const auto a = test_support::random_homogeneous(rng, d, n);
    const auto b = test_support::random_homogeneous(rng, d, k);
    const auto xx = test_support::random_tensor(rng, d, 2);
    const auto yy = test_support::random_tensor(rng, d, 2 + n - k);
    const int top = 2 + n;
    const double l2 = inner_product(tensor_mul(xx, a, top), tensor_mul(yy, b, top));
    const auto bra = adjoint_right(b, truncate(a, top));
    e_prop = std::max(e_prop, std::abs(l2 - inner_product(adjoint_left(xx, yy), bra)));
    for (int lvl = 0; lvl <= bra.depth(); ++lvl) {
      if (lvl != n - k) e_prop = std::max(e_prop, norm_p(project(bra, lvl), 1.0));
    }

    if (!(norm_p(tensor_mul(x, y, 2 * depth), 1.0) <= norm_p(x, 1.0) * norm_p(y, 1.0) * (1.0 + 1e-15))) {
      ++young_violations;
    }

    auto g = test_support::random_tensor(rng, d, depth, 0.5, true);
    e_exp = std::max(e_exp, max_abs_diff(log_tensor(exp_tensor(g)), g));
    auto h = g;
    h.data()[0] = 1.0;
    e_exp = std::max(e_exp, max_abs_diff(exp_tensor(log_tensor(h)), h));

    const double l = lam(rng);
    e_dil = std::max({e_dil, max_abs_diff(dilate(tensor_mul(x, y), l), tensor_mul(dilate(x, l), dilate(y, l))),
                      max_abs_diff(dilate(exp_tensor(g), l), exp_tensor(dilate(g, l)))});
  }
  fail_if(o, !(e_dual <= kAlgebraTol) || !(e_prop <= kAlgebraTol) || young_violations > 0 ||
                 !(e_exp <= kAlgebraTol) || !(e_dil <= kAlgebraTol));
  o.detail = "duality=" + num(e_dual) + " homogeneous identity=" + num(e_prop) +
             " young violations=" + std::to_string(young_violations) + " exp/log=" + num(e_exp) +
             " dilation=" + num(e_dil);
  return o;
}

Outcome gaussian_mgf() {
  Outcome o;
  // Importance sampling from N(0, 3 I): the weighted integrand
  // 3^(d/2) exp(-|x|^2 / 12) |x|^(2M) has finite variance.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, std::sqrt(3.0));
  double worst_z = 0.0;
  for (int d = 1; d <= 3; ++d) {
    for (int M = 0; M <= 2; ++M) {
      double mean = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < kMgfSamples; ++i) {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double x = normal(rng);
          r2 += x * x;
        }
        const double f = std::pow(3.0, 0.5 * d) * std::exp(-r2 / 12.0) * std::pow(r2, M);
        const double delta = f - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (f - mean);
      }
      const double se = std::sqrt(m2 / (kMgfSamples - 1.0) / kMgfSamples);
      const double exact = gaussian_mgf_moment(d, M);
      worst_z = std::max(worst_z, std::abs(mean - exact) / se);
    }
  }
  const double root2 = std::abs(gaussian_mgf_moment(1, 0) - std::sqrt(2.0));
  fail_if(o, !(worst_z <= kSigmas) || !(root2 <= kSqrt2Tol));
  o.detail = "max |z|=" + num(worst_z) + " |E(d=1,M=0)-sqrt2|=" + num(root2);
  return o;
}

Outcome apriori_bound() {
  Outcome o;
  double worst = 0.0;
  std::string where;
  for (const auto& [name, ratio] : g_apriori) {
    if (ratio > worst) {
      worst = ratio;
      where = name;
    }
  }
  fail_if(o, g_apriori.empty() || !(worst <= 1.0));
  o.detail = std::to_string(g_apriori.size()) + " surfaces, max |w|/psi=" + num(worst) + " (" + where + ")";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Bessel closed form", bessel_closed_form},
      {"Brownian kernel", brownian_kernel},
      {"oracle equivalence", oracle_equivalence},
      {"truncation certificate", truncation_certificate_decay},
      {"development bounds", bound_suite},
      {"Fawcett / Monte Carlo", fawcett_monte_carlo},
      {"MMD assembly", mmd_assembly},
      {"algebra properties", algebra_properties},
      {"Gaussian MGF", gaussian_mgf},
      {"a priori bound", apriori_bound},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
