#include "oracles.hpp"
#include "swcs/solvers.hpp"
#include "swcs/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <numbers>

using namespace swcs;
using std::numbers::pi;

namespace {

/// Noiseless residual data r = F dx for a known dx.
ResidualProblem problem_for(NufftOperator const &op, Image const &dx, double epsilon = 0.0)
{
  return make_residual_problem(op.forward(dx), op, epsilon);
}

double data_energy(KSpaceData const &r)
{
  double e = 0.0;
  for (auto const &t : r.samples) { e += norm2(t); }
  return e;
}

} // namespace

TEST_CASE("soft threshold")
{
  CHECK(soft_threshold(Cx{3.0, 0.0}, 1.0) == Cx{2.0, 0.0});
  CHECK(soft_threshold(Cx{-0.5, 0.0}, 1.0) == Cx{0.0, 0.0});
  auto const v = soft_threshold(Cx{3.0, 4.0}, 2.5);
  CHECK(v.real() == doctest::Approx(1.5));
  CHECK(v.imag() == doctest::Approx(2.0));
  CHECK(soft_threshold(Cx{0.0, 0.0}, 0.0) == Cx{0.0, 0.0});
  CHECK(soft_threshold(Cx{-2.0, 1.0}, 0.0) == Cx{-2.0, 1.0});
  CHECK_THROWS_AS(soft_threshold(Cx{1.0, 0.0}, -1.0), ValidationError);
}

TEST_CASE("residual data")
{
  int const n = 16;
  auto const ts = golden_angle_trajectories(1, 7, 32, pi);
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(1);
  auto const x = oracle::random_image(n, rng);
  auto const y = op.forward(x);
  auto const zero = residual_data(y, op, x);
  CHECK(data_energy(zero) < 1e-24 * data_energy(y));
  CHECK(residual_data(y, op, Image(n)).samples == y.samples);

  auto const p = make_residual_problem(y, op, 0.5);
  CHECK(p.data_energy == doctest::Approx(data_energy(y)));
  CHECK(p.epsilon == 0.5);
  // ||F dx - r||^2 through the kernel equals the direct evaluation
  auto const dx = oracle::random_image(n, rng);
  auto const fdx = op.forward(dx);
  double direct = 0.0;
  for (std::size_t t = 0; t < y.samples.size(); ++t) {
    for (std::size_t j = 0; j < y.samples[t].size(); ++j) { direct += std::norm(fdx.samples[t][j] - y.samples[t][j]); }
  }
  CHECK(p.data_misfit(dx) == doctest::Approx(direct).epsilon(1e-10));
  CHECK_THROWS_AS(make_residual_problem(y, op, -1.0), ValidationError);
}

TEST_CASE("zero residual data gives dx = 0 without iterating")
{
  int const n = 16;
  NufftOperator const op(n, golden_angle_trajectories(1, 5, 32, pi));
  auto const p = problem_for(op, Image(n));
  auto const k = komp_solve(p, {8, 10, {50, 1e-10}});
  CHECK(k.delta.norm() == 0.0);
  CHECK(k.iterations == 0);
  CHECK(k.reached_epsilon);

  auto const b = split_bregman_solve(p, {1.0, 0.1, 5, 1, {50, 1e-6}});
  CHECK(b.delta.norm() == 0.0);
  CHECK(b.iterations == 0);
}

TEST_CASE("KOMP on complete Cartesian sampling recovers a 5-sparse image in one iteration")
{
  int const n = 16;
  NufftOperator const op(n, oracle::cartesian_rows(n));
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> support;
    auto const dx = oracle::sparse_image(n, 5, rng, &support);
    auto const p = problem_for(op, dx);
    auto const sol = komp_solve(make_residual_problem(op.forward(dx), op, 1e-8 * p.data_energy), {5, 10, {100, 1e-12}});
    CHECK(sol.iterations == 1);
    auto got = sol.support;
    std::sort(got.begin(), got.end());
    CHECK(got == support);
    CHECK(oracle::rel_max_error(sol.delta.values(), dx.values()) < 1e-8);
  }
}

TEST_CASE("KOMP recovers 5-sparse residuals from 73 golden-angle spokes")
{
  int const n = 64;
  auto const ts = golden_angle_trajectories(464, 73, 2 * n, pi);
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> support;
    auto const dx = oracle::sparse_image(n, 5, rng, &support);
    auto const r = op.forward(dx);
    auto const p = make_residual_problem(r, op, 1e-8 * data_energy(r));
    auto const sol = komp_solve(p, {1, 10, {100, 1e-12}});
    auto got = sol.support;
    std::sort(got.begin(), got.end());
    REQUIRE(got == support);
    auto const ref = oracle::restricted_least_squares(n, ts, support, r);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.pixels(); ++i) { err = std::max(err, std::abs(sol.delta[i] - ref[i])); }
    CHECK(err < 1e-6);
    CHECK(sol.reached_epsilon);
  }
}

TEST_CASE("KOMP with K = 1 reproduces orthogonal matching pursuit")
{
  int const n = 12;
  auto const ts = golden_angle_trajectories(1, 6, 2 * n, pi); // underdetermined: 144 samples, 144 unknowns
  NufftOperator const op(n, ts);
  Eigen::MatrixXcd const a = oracle::dense_matrix(n, ts);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    auto const dx = oracle::sparse_image(n, 6, rng);
    auto const r = op.forward(dx);
    // as many steps as the sparsity: later picks would be made on a rounding-level residual
    int const steps = 6;
    Eigen::VectorXcd coef;
    auto const ref = oracle::omp_reference(a, oracle::to_vector(r), steps, coef);
    auto const sol = komp_solve(make_residual_problem(r, op, 0.0), {1, steps, {400, 1e-13}});
    REQUIRE(sol.support.size() == ref.size());
    CHECK(sol.support == ref);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(sol.delta[static_cast<std::size_t>(ref[i])] - coef(static_cast<Eigen::Index>(i))) < 1e-6);
    }
  }
}

TEST_CASE("KOMP support grows by at most K and the residual never increases")
{
  int const n = 32;
  auto const ts = golden_angle_trajectories(1, 21, 64, pi);
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(12);
  auto const y = oracle::random_data(ts, rng);
  for (int k : {1, 7, 40}) {
    auto const sol = komp_solve(make_residual_problem(y, op, 0.0), {k, 12, {30, 1e-10}});
    for (std::size_t i = 1; i < sol.steps.size(); ++i) {
      CHECK(sol.steps[i].support_size <= static_cast<double>(sol.steps[i].iteration * k));
      CHECK(sol.steps[i].residual_norm <= sol.steps[i - 1].residual_norm * (1.0 + 1e-10));
    }
    CHECK(static_cast<int>(sol.support.size()) <= sol.iterations * k);
  }
}

TEST_CASE("KOMP flags an empty selection")
{
  // two samples at the same k with opposite values: energy in the data, none in F^H r
  int const n = 8;
  Trajectory const twice{1, 0.0, 1, {{0.3, 0.2}, {0.3, 0.2}}};
  NufftOperator const op(n, {twice});
  KSpaceData r;
  r.samples = {{Cx{1.0, 0.0}, Cx{-1.0, 0.0}}};
  auto const p = make_residual_problem(r, op, 0.0);
  REQUIRE(p.correlation.norm() == 0.0);
  auto const sol = komp_solve(p, {2, 5, {100, 1e-12}});
  CHECK(sol.empty_selection);
  CHECK(sol.iterations == 0);
  CHECK_FALSE(sol.reached_epsilon);
  CHECK(sol.delta.norm() == 0.0);
  CHECK_THROWS_AS(komp_solve(p, {0, 5, {}}), ValidationError);
  CHECK_THROWS_AS(komp_solve(p, {1, 0, {}}), ValidationError);
}

TEST_CASE("split-Bregman on an orthogonal operator matches the closed-form fixed point")
{
  // F^H F = c I with c = N^2. The alternation dx = (b + l1 u) / (c + l1), u = soft(dx, tau)
  // has the fixed point u = soft(b, tau (c + l1)) / c, dx = (b + l1 u) / (c + l1).
  int const n = 8;
  double const c = n * n;
  NufftOperator const op(n, oracle::cartesian_rows(n));
  std::mt19937_64 rng(31);
  auto const y = oracle::random_data(op.trajectories(), rng);
  auto const p = make_residual_problem(y, op, 0.0);
  auto const &b = p.correlation;
  for (double l1 : {c, 4.0 * c}) {
    for (double l2 : {0.0, 0.5, 3.0}) {
      double const tau = l2 / (2.0 * l1);
      auto const sol = split_bregman_solve(p, {l1, l2, 1, 200, {10, 1e-14}});
      double err = 0.0;
      double scale = 0.0;
      for (std::size_t j = 0; j < b.pixels(); ++j) {
        Cx const u = soft_threshold(b[j], tau * (c + l1)) / c;
        Cx const dx = (b[j] + l1 * u) / (c + l1);
        err = std::max(err, std::abs(sol.delta[j] - dx));
        scale = std::max(scale, std::abs(dx));
      }
      INFO("lambda1=" << l1 << " lambda2=" << l2);
      CHECK(err < 1e-6 * scale);
    }
  }
}

TEST_CASE("split-Bregman half steps never raise the objective")
{
  int const n = 24;
  auto const ts = golden_angle_trajectories(1, 13, 48, pi);
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(4);
  auto const y = oracle::random_data(ts, rng);
  auto const p = make_residual_problem(y, op, 0.0);
  for (double l1 : {50.0, 2000.0}) {
    auto const sol = split_bregman_solve(p, {l1, 0.2 * l1, 4, 5, {200, 1e-12}});
    REQUIRE(!sol.sweep_objectives.empty());
    for (auto const &objs : sol.sweep_objectives) {
      REQUIRE(objs.size() == 11);
      for (std::size_t i = 1; i < objs.size(); ++i) { CHECK(objs[i] <= objs[i - 1] + 1e-10 * std::abs(objs[0])); }
    }
  }
  CHECK_THROWS_AS(split_bregman_solve(p, {0.0, 1.0, 1, 1, {}}), ValidationError);
  CHECK_THROWS_AS(split_bregman_solve(p, {1.0, -1.0, 1, 1, {}}), ValidationError);
  CHECK_THROWS_AS(split_bregman_solve(p, {1.0, 1.0, 0, 1, {}}), ValidationError);
}

TEST_CASE("split-Bregman without the l1 term converges to least squares")
{
  // complete Cartesian grid plus a few spokes: a well-conditioned, non-orthogonal operator
  int const n = 16;
  auto ts = oracle::cartesian_rows(n);
  for (auto &t : golden_angle_trajectories(1, 5, 32, pi)) {
    t.index += n;
    ts.push_back(t);
  }
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(8);
  auto const y = oracle::random_data(ts, rng);
  auto const p = make_residual_problem(y, op, 0.0);
  auto const ls = reconstruct_estimate(p.normal, p.correlation, {1000, 1e-10});
  REQUIRE(ls.report.converged);
  auto const sol = split_bregman_solve(p, {20.0, 0.0, 60, 1, {500, 1e-12}});
  CHECK(oracle::rel_l2_error(sol.delta.values(), ls.image.values()) < 1e-6);
}

TEST_CASE("both solvers meet the fidelity bound on noiseless sparse problems")
{
  int const n = 32;
  auto const ts = golden_angle_trajectories(200, 41, 2 * n, pi); // 2624 samples, 1024 unknowns
  NufftOperator const op(n, ts);
  std::mt19937_64 rng(15);
  auto const dx = oracle::sparse_image(n, 5, rng);
  auto const r = op.forward(dx);
  double const eps = 1e-8 * data_energy(r);
  auto const p = make_residual_problem(r, op, eps);

  auto const k = komp_solve(p, {1, 20, {200, 1e-12}});
  CHECK(k.reached_epsilon);
  CHECK(p.data_misfit(k.delta) <= eps);

  auto const b = split_bregman_solve(p, {100.0, 1.0, 200, 1, {200, 1e-12}});
  CHECK(b.reached_epsilon);
  CHECK(p.data_misfit(b.delta) <= eps);
}

TEST_CASE("diagnostics CSV")
{
  ResidualSolution s;
  s.steps = {{0, 2.0, 0.0, 0.0}, {1, 1.0, 64.0, 0.0}};
  auto const k = diagnostics_csv(s, true);
  CHECK(k.rfind("iteration,residual_norm,support_size\n0,2.000000000e+00,0\n1,1.000000000e+00,64\n", 0) == 0);
  auto const b = diagnostics_csv(s, false);
  CHECK(b.rfind("iteration,residual_norm,objective\n", 0) == 0);
}
