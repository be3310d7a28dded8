#include <cmath>
#include <random>

#include "doctest.h"
#include "levy_sigkernel/development.hpp"
#include "levy_sigkernel/errors.hpp"
#include "levy_sigkernel/kernel_solver.hpp"
#include "test_support.hpp"

using namespace levy_sigkernel;
using namespace test_support;

namespace {

constexpr double kI0of1 = 1.2660658777520084;
constexpr double kI0of2 = 2.2795853023360673;

PiecewiseVelocity velocity(std::mt19937_64& rng, int dim, int depth, std::vector<double> grid,
                           double scale) {
  PiecewiseVelocity v;
  v.dim = dim;
  v.depth = depth;
  v.time_grid = std::move(grid);
  for (std::size_t i = 0; i + 1 < v.time_grid.size(); ++i) {
    v.values.push_back(random_tensor(rng, dim, depth, scale, true));
  }
  v.validate();
  return v;
}

// <X_s, X~_t> with X, X~ the developments of pi_M y and pi_N y~, summed to depth D.
double develop_oracle(const PiecewiseVelocity& v, const PiecewiseVelocity& vt, int M, int N,
                      double s, double t, int D) {
  return inner_product(develop(truncate(v, M), 0.0, s, D), develop(truncate(vt, N), 0.0, t, D));
}

}  // namespace

TEST_CASE("modified Bessel function I0") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(std::abs(bessel_i0(1.0) - kI0of1) < 1e-15);
  CHECK(std::abs(bessel_i0(2.0) - kI0of2) < 1e-15);
  CHECK(std::abs(bessel_i0(10.0) - 2815.716628466254) < 1e-9);
  CHECK_THROWS_AS(bessel_i0(-1.0), InvalidParameter);
  CHECK(std::abs(apriori_psi(1.0, 1.0) - std::exp(2.0) * kI0of2) < 1e-13);
  CHECK(apriori_psi(0.0, 3.0) == std::exp(3.0));
}

TEST_CASE("make_grid and cell_intervals") {
  const auto g = make_grid(1.0, 4, {0.3, 0.5, 1.0});
  CHECK(g == std::vector<double>{0.0, 0.25, 0.3, 0.5, 0.75, 1.0});
  CHECK(cell_intervals(g, {0.0, 0.3, 1.0}) == std::vector<std::size_t>{0, 0, 1, 1, 1});
  CHECK_THROWS_AS(cell_intervals(make_grid(1.0, 4), {0.0, 0.3, 1.0}), GridMismatch);
  CHECK_THROWS_AS(cell_intervals(make_grid(2.0, 4), {0.0, 1.0}), GridMismatch);
  CHECK_THROWS_AS(make_grid(1.0, 0), InvalidParameter);
}

TEST_CASE("scalar Goursat problem with constant alpha") {
  const int n = 512;
  const auto g = make_grid(1.0, n);
  const auto u = solve_goursat_scalar(Eigen::MatrixXd::Ones(n + 1, n + 1), g, g);
  CHECK(std::abs(u.value() - kI0of2) < 1e-5);
  CHECK(u.w_at(0, 7) == 1.0);
  CHECK(u.w_at(9, 0) == 1.0);
  const auto uc = solve_goursat_scalar_cells(Eigen::MatrixXd::Ones(n, n), g, g);
  CHECK(std::abs(uc.value() - kI0of2) < 1e-5);
  const auto ur = solve_goursat_scalar_cells(Eigen::MatrixXd::Ones(64, 64), make_grid(1.0, 64),
                                             make_grid(1.0, 64), {.richardson = true});
  CHECK(std::abs(ur.value() - kI0of2) < 1e-7);
  CHECK(ur.richardson);
  CHECK_THROWS_AS(solve_goursat_scalar(Eigen::MatrixXd::Ones(3, 3), make_grid(1.0, 2),
                                       make_grid(1.0, 2), {.richardson = true}),
                  Unsupported);
  CHECK_THROWS_AS(solve_goursat_scalar(Eigen::MatrixXd::Ones(3, 4), make_grid(1.0, 2), make_grid(1.0, 2)),
                  GridMismatch);
}

TEST_CASE("separable alpha reduces to Bessel of the product of integrals") {
  // u(s, t) = I0(2 sqrt(F(s) G(t))) with F' = f, G' = g.
  auto f = [](double s) { return 1.0 + s; };
  auto g = [](double t) { return std::cos(t); };
  const auto grid = make_grid(1.0, 128);
  const auto u = solve_goursat_scalar(f, g, grid, grid, {.richardson = true});
  const double F = 1.5, G = std::sin(1.0);
  CHECK(std::abs(u.value() - bessel_i0(2.0 * std::sqrt(F * G))) < 1e-7);
  CHECK(u.apriori_ratio() <= 1.0);
}

TEST_CASE("second-order convergence of the scalar scheme") {
  auto f = [](double s) { return std::exp(s); };
  auto g = [](double t) { return 1.0 + t * t; };
  const double F = std::exp(1.0) - 1.0, G = 4.0 / 3.0;
  const double exact = bessel_i0(2.0 * std::sqrt(F * G));
  double prev = 0.0;
  for (int n : {16, 32, 64, 128}) {
    const auto grid = make_grid(1.0, n);
    const double err = std::abs(solve_goursat_scalar(f, g, grid, grid).value() - exact);
    if (prev > 0.0) {
      const double order = std::log2(prev / err);
      CHECK(order > 1.9);
      CHECK(order < 2.1);
    }
    prev = err;
  }
}

TEST_CASE("Brownian kernel") {
  const auto bm = brownian_triplet(Eigen::MatrixXd::Ones(1, 1), 1.0);
  const auto v = characteristic_velocity(bm, 2);
  const auto grid = make_grid(1.0, 64);
  const auto k = solve_truncated_system(v, v, 2, 2, grid, grid, {.richardson = true});
  CHECK(std::abs(k.value() - kI0of1) < 1e-9);
  CHECK(*k.certificate == 0.0);
  const auto l2 = solve_level2_system(bm, bm, grid, grid, {.richardson = true});
  CHECK(std::abs(l2.value() - kI0of1) < 1e-9);
}

TEST_CASE("truncated system matches the development oracle") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 1 + trial % 2;
    const int M = 1 + trial % 3, N = 1 + (trial / 2) % 3;
    const auto v = velocity(rng, d, 3, {0.0, 0.375, 1.0}, 0.5);
    const auto vt = velocity(rng, d, 3, {0.0, 0.5, 0.75, 1.0}, 0.5);
    const int D = d == 1 ? 40 : 14;
    const auto grid = make_grid(1.0, 64);
    const auto k = solve_truncated_system(v, vt, M, N, grid, grid, {.richardson = true});
    for (std::size_t p : {std::size_t{24}, std::size_t{64}}) {
      for (std::size_t q : {std::size_t{32}, std::size_t{64}}) {
        const double oracle = develop_oracle(v, vt, M, N, grid[p], grid[q], D);
        CHECK(std::abs(k.w_at(p, q) - oracle) < 1e-6 * std::abs(oracle));
      }
    }
  }
}

TEST_CASE("second-order convergence of the truncated system") {
  std::mt19937_64 rng(42);
  const auto v = velocity(rng, 2, 3, {0.0, 0.5, 1.0}, 0.6);
  const auto vt = velocity(rng, 2, 3, {0.0, 0.25, 1.0}, 0.6);
  const double oracle = develop_oracle(v, vt, 3, 2, 1.0, 1.0, 18);
  double prev = 0.0;
  for (int n : {256, 512, 1024}) {
    const auto grid = make_grid(1.0, n);
    const double err = std::abs(solve_truncated_system(v, vt, 3, 2, grid, grid).value() - oracle);
    if (prev > 0.0) {
      const double order = std::log2(prev / err);
      CHECK(order > 1.8);
      CHECK(order < 2.2);
    }
    prev = err;
  }
}

TEST_CASE("level-2 system agrees with the truncated system at M = N = 2") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 1; d <= 3; ++d) {
    LevyTriplet a = zero_triplet(d, 1.0, 2), b = zero_triplet(d, 1.0, 2);
    a.time_grid = {0.0, 0.5, 1.0};
    a.intervals.push_back(a.intervals[0]);
    for (auto* tr : {&a, &b}) {
      for (auto& iv : tr->intervals) {
        for (double& c : iv.drift.level(1)) c = u(rng);
        for (int i = 0; i < d; ++i) {
          for (int j = i + 1; j < d; ++j) {
            const double x = u(rng);
            iv.drift.level(2)[static_cast<std::size_t>(i * d + j)] = x;
            iv.drift.level(2)[static_cast<std::size_t>(j * d + i)] = -x;
          }
        }
        const Eigen::MatrixXd s = Eigen::MatrixXd::Random(d, d);
        iv.diffusion = s * s.transpose();
      }
    }
    const auto sg = make_grid(1.0, 20), tg = make_grid(1.0, 24);
    const auto l2 = solve_level2_system(a, b, sg, tg);
    const auto tr = solve_truncated_system(characteristic_velocity(a, 2), characteristic_velocity(b, 2), 2,
                                           2, sg, tg);
    for (std::size_t i = 0; i < l2.w.size(); ++i) CHECK(std::abs(l2.w[i] - tr.w[i]) < 1e-12 * (1 + std::abs(tr.w[i])));
    for (std::size_t p = 0; p < sg.size(); p += 5) {
      for (std::size_t q = 0; q < tg.size(); q += 6) {
        CHECK(max_abs_diff(l2.f_at(p, q), tr.f_at(p, q)) < 1e-12);
        CHECK(max_abs_diff(l2.g_at(p, q), tr.g_at(p, q)) < 1e-12);
      }
    }
  }
  LevyTriplet jumps = zero_triplet(1, 1.0, 1);
  jumps.intervals[0].jumps.kind = JumpKind::Atomic;
  jumps.intervals[0].jumps.atoms.push_back({1.0, TruncatedTensor::basis(1, 1, {1})});
  CHECK_THROWS_AS(solve_level2_system(jumps, jumps, make_grid(1.0, 2), make_grid(1.0, 2)), Unsupported);
}

TEST_CASE("swapping the two velocities transposes the surface") {
  std::mt19937_64 rng(44);
  const auto v = velocity(rng, 2, 3, {0.0, 0.3, 1.0}, 0.7);
  const auto vt = velocity(rng, 2, 4, {0.0, 0.6, 1.0}, 0.7);
  const auto sg = make_grid(1.0, 10, {0.3}), tg = make_grid(1.0, 12, {0.6});
  const auto k = solve_truncated_system(v, vt, 3, 2, sg, tg);
  const auto kt = solve_truncated_system(vt, v, 2, 3, tg, sg).transposed();
  REQUIRE(k.w.size() == kt.w.size());
  for (std::size_t i = 0; i < k.w.size(); ++i) CHECK(std::abs(k.w[i] - kt.w[i]) < 1e-13 * (1 + std::abs(k.w[i])));
  CHECK(max_abs_diff(k.f_at(5, 7), kt.f_at(5, 7)) < 1e-13);
  CHECK(max_abs_diff(k.g_at(5, 7), kt.g_at(5, 7)) < 1e-13);
  CHECK(std::abs(*k.certificate - *kt.certificate) < 1e-13 * *k.certificate);
}

TEST_CASE("a priori bound and certificate") {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 1 + trial % 2;
    const auto v = velocity(rng, d, 3, {0.0, 0.5, 1.0}, 0.5);
    const auto vt = velocity(rng, d, 3, {0.0, 1.0}, 0.5);
    const auto grid = make_grid(1.0, 32);
    for (int M = 1; M <= 3; ++M) {
      const auto k = solve_truncated_system(v, vt, M, M, grid, grid, {.richardson = true});
      CHECK(k.apriori_ratio() <= 1.0);
      const int D = d == 1 ? 40 : 14;
      const double full = develop_oracle(v, vt, 3, 3, 1.0, 1.0, D);
      CHECK(std::abs(develop_oracle(v, vt, M, M, 1.0, 1.0, D) - full) <= *k.certificate);
      if (M == 3) CHECK(*k.certificate == 0.0);
    }
  }
}

TEST_CASE("solver input validation") {
  std::mt19937_64 rng(46);
  const auto v = velocity(rng, 2, 2, {0.0, 0.3, 1.0}, 0.5);
  const auto w = velocity(rng, 3, 2, {0.0, 1.0}, 0.5);
  const auto g = make_grid(1.0, 4);
  CHECK_THROWS_AS(solve_truncated_system(v, v, 2, 2, g, g), GridMismatch);
  CHECK_THROWS_AS(solve_truncated_system(v, w, 2, 2, make_grid(1.0, 4, {0.3}), g), DimMismatch);
  CHECK_THROWS_AS(solve_truncated_system(v, v, 0, 2, g, g), InvalidParameter);
  CHECK_THROWS_AS(solve_truncated_system(w, w, 2, 2, make_grid(2.0, 4), make_grid(1.0, 4)), GridMismatch);
}
