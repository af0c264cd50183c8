#include "oracles.hpp"
#include "swcs/fft.hpp"
#include "swcs/operators.hpp"
#include "swcs/trajectories.hpp"

#include <cmath>
#include <doctest.h>
#include <numbers>

using namespace swcs;
using std::numbers::pi;

namespace {

double adjoint_defect(NufftOperator const &op, Image const &x, KSpaceData const &y)
{
  auto const fx = op.forward(x);
  auto const fhy = op.adjoint(y);
  Cx lhs{0.0, 0.0};
  double nfx = 0.0;
  double ny = 0.0;
  for (std::size_t t = 0; t < y.samples.size(); ++t) {
    lhs += dot(y.samples[t], fx.samples[t]); // <Fx, y> = sum conj(y) Fx
    nfx += norm2(fx.samples[t]);
    ny += norm2(y.samples[t]);
  }
  Cx const rhs = dot(fhy.values(), x.values()); // <x, F^H y>
  return std::abs(lhs - rhs) / std::sqrt(nfx * ny);
}

} // namespace

TEST_CASE("forward of simple images")
{
  int const n = 16;
  NufftOperator const op(n, golden_angle_trajectories(1, 3, 16, pi));

  Image impulse(n);
  impulse(n / 2, n / 2) = 1.0;
  for (auto const &t : op.forward(impulse).samples) {
    for (auto v : t) { CHECK(std::abs(v - Cx{1.0, 0.0}) < 1e-14); }
  }

  Image ones(n);
  for (auto &v : ones.values()) { v = 1.0; }
  Trajectory dc{1, 0.0, 1, {{0.0, 0.0}}};
  NufftOperator const dc_op(n, {dc});
  CHECK(std::abs(dc_op.forward(ones).samples[0][0] - Cx(n * n, 0.0)) < 1e-10);

  std::mt19937_64 rng(3);
  auto const x = oracle::random_image(n, rng);
  Image shifted(n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 1; ix < n; ++ix) { shifted(iy, ix) = x(iy, ix - 1); }
  }
  Image trimmed = x; // drop the column that falls off the edge
  for (int iy = 0; iy < n; ++iy) { trimmed(iy, n - 1) = 0.0; }
  auto const a = op.forward(trimmed);
  auto const b = op.forward(shifted);
  for (std::size_t t = 0; t < a.samples.size(); ++t) {
    auto const &ks = op.trajectories()[t].samples;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      CHECK(std::abs(b.samples[t][j] - a.samples[t][j] * std::polar(1.0, -ks[j].kx)) < 1e-11);
    }
  }
}

TEST_CASE("forward matches the direct summation oracle")
{
  std::mt19937_64 rng(11);
  for (int n : {8, 15, 32}) {
    auto const ts = golden_angle_trajectories(5, 4, 2 * n, pi);
    NufftOperator const op(n, ts);
    auto const x = oracle::random_image(n, rng);
    auto const y = op.forward(x);
    for (std::size_t t = 0; t < ts.size(); ++t) {
      auto const ref = oracle::direct_ndft(x, ts[t].samples);
      CHECK(oracle::rel_max_error(y.samples[t], ref) < 1e-12);
    }
  }
}

TEST_CASE("adjoint of simple data")
{
  int const n = 8;
  Trajectory dc{1, 0.0, 1, {{0.0, 0.0}}};
  NufftOperator const op(n, {dc});
  Image impulse(n);
  impulse(n / 2, n / 2) = 1.0;
  auto const back = op.adjoint(op.forward(impulse));
  for (auto v : back.values()) { CHECK(std::abs(v - Cx{1.0, 0.0}) < 1e-14); }

  NufftOperator const op2(n, golden_angle_trajectories(1, 3, 8, pi));
  KSpaceData zero;
  for (auto const &t : op2.trajectories()) { zero.samples.emplace_back(t.samples.size()); }
  CHECK(op2.adjoint(zero).norm() == 0.0);
}

TEST_CASE("adjoint identity for random pairs")
{
  std::mt19937_64 rng(2024);
  for (int n : {8, 16, 32}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto const ts = golden_angle_trajectories(1 + trial, 3, 2 * n, pi);
      NufftOperator const op(n, ts);
      auto const x = oracle::random_image(n, rng);
      auto const y = oracle::random_data(ts, rng);
      CHECK(adjoint_defect(op, x, y) < 1e-10);
    }
  }
}

TEST_CASE("forward is linear")
{
  std::mt19937_64 rng(5);
  int const n = 16;
  NufftOperator const op(n, golden_angle_trajectories(1, 5, 32, pi));
  auto const x = oracle::random_image(n, rng);
  auto const z = oracle::random_image(n, rng);
  Cx const alpha{0.7, -1.3};
  Cx const beta{-2.1, 0.4};
  auto const lhs = op.forward(alpha * x + beta * z);
  auto const fx = op.forward(x);
  auto const fz = op.forward(z);
  for (std::size_t t = 0; t < lhs.samples.size(); ++t) {
    std::vector<Cx> rhs(lhs.samples[t].size());
    for (std::size_t j = 0; j < rhs.size(); ++j) { rhs[j] = alpha * fx.samples[t][j] + beta * fz.samples[t][j]; }
    CHECK(oracle::rel_max_error(lhs.samples[t], rhs) < 1e-12);
  }
}

TEST_CASE("axis spokes with grid-aligned radii agree with the FFT")
{
  std::mt19937_64 rng(8);
  for (int n : {8, 16, 64}) {
    auto const x = oracle::random_image(n, rng);
    auto const spec = oracle::cartesian_spectrum(x);
    Trajectory const horizontal{1, 0.0, 1, make_spoke(0.0, n, pi)};
    Trajectory const vertical{2, pi / 2, 2, make_spoke(pi / 2, n, pi)};
    NufftOperator const op(n, {horizontal, vertical});
    auto const y = op.forward(x);
    std::vector<Cx> row(n);
    std::vector<Cx> col(n);
    for (int u = 0; u < n; ++u) {
      row[u] = spec[static_cast<std::size_t>(n / 2) * n + u];
      col[u] = spec[static_cast<std::size_t>(u) * n + n / 2];
    }
    CHECK(oracle::rel_max_error(y.samples[0], row) < 1e-10);
    CHECK(oracle::rel_max_error(y.samples[1], col) < 1e-10);

    NufftOperator const grid(n, oracle::cartesian_rows(n));
    auto const full = grid.forward(x);
    std::vector<Cx> flat;
    for (auto const &t : full.samples) { flat.insert(flat.end(), t.begin(), t.end()); }
    CHECK(oracle::rel_max_error(flat, spec) < 1e-10);
  }
}

TEST_CASE("operator rejects samples outside the k-space box and bad shapes")
{
  Trajectory bad{1, 0.0, 1, {{4.0, 0.0}}};
  CHECK_THROWS_AS(NufftOperator(8, {bad}), ValidationError);
  NufftOperator const op(8, golden_angle_trajectories(1, 2, 8, pi));
  KSpaceData y;
  y.samples.emplace_back(8);
  CHECK_THROWS_AS(op.adjoint(y), ValidationError);
  CHECK_THROWS_AS(op.forward(Image(4)), ValidationError);
}

TEST_CASE("subset restricts to a block of trajectories")
{
  std::mt19937_64 rng(1);
  NufftOperator const op(8, golden_angle_trajectories(1, 6, 16, pi));
  auto const sub = op.subset(2, 3);
  REQUIRE(sub.trajectories().size() == 3);
  CHECK(sub.trajectories()[0].index == 3);
  auto const x = oracle::random_image(8, rng);
  auto const a = op.forward(x);
  auto const b = sub.forward(x);
  for (int t = 0; t < 3; ++t) { CHECK(b.samples[t] == a.samples[t + 2]); }
  CHECK(sub.total_samples() == 48);
}

TEST_CASE("Hamming weights")
{
  for (double M : {4.0, 72.0, 304.0}) {
    CHECK(hamming_weight(0.0, M) == doctest::Approx(0.08));
    CHECK(hamming_weight(M / 2, M) == doctest::Approx(1.0));
    CHECK(hamming_weight(M / 4, M) == doctest::Approx(0.54));
  }
  for (int count : {3, 73, 305}) {
    auto const w = hamming_window(count);
    REQUIRE(static_cast<int>(w.size()) == count);
    CHECK(w[count / 2] == doctest::Approx(1.0));
    for (int j = 0; j < count; ++j) {
      CHECK(w[j] <= w[count / 2]);
      CHECK(w[j] == doctest::Approx(w[count - 1 - j]).epsilon(1e-12));
    }
  }
  CHECK(hamming_window(1) == std::vector<double>{1.0});
  CHECK_THROWS_AS(hamming_window(0), ValidationError);
}

TEST_CASE("window application")
{
  std::mt19937_64 rng(4);
  auto const ts = golden_angle_trajectories(1, 3, 8, pi);
  auto const y = oracle::random_data(ts, rng);
  std::vector<double> const ones(3, 1.0);
  CHECK(apply_window(y, ones).samples == y.samples);

  std::vector<double> const w{0.08, 1.0, 0.54};
  auto const scaled = apply_window(y, w);
  for (std::size_t j = 0; j < 8; ++j) { CHECK(scaled.samples[0][j] == y.samples[0][j] * 0.08); }
  std::vector<double> const inv{1 / 0.08, 1.0, 1 / 0.54};
  auto const back = apply_window(scaled, inv);
  for (std::size_t t = 0; t < 3; ++t) { CHECK(oracle::rel_max_error(back.samples[t], y.samples[t]) < 1e-12); }
  CHECK_THROWS_AS(apply_window(y, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("Toeplitz normal operator matches the dense weighted normal matrix")
{
  std::mt19937_64 rng(77);
  for (int n : {7, 8, 16}) {
    auto const ts = golden_angle_trajectories(10, 5, 2 * n, pi);
    std::vector<double> const w{0.2, 0.7, 1.0, 0.7, 0.2};
    auto const kernel = NormalKernel::from_trajectories(n, ts, w);
    auto const x = oracle::random_image(n, rng);
    auto const got = kernel.apply(x);

    Eigen::MatrixXcd const a = oracle::dense_matrix(n, ts);
    Eigen::VectorXd d(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) { d(r) = w[static_cast<std::size_t>(r) / (2 * n)]; }
    Eigen::VectorXcd const ref = a.adjoint() * (d.asDiagonal() * (a * oracle::to_vector(x)));
    std::vector<Cx> refv(ref.data(), ref.data() + ref.size());
    CHECK(oracle::rel_max_error(got.values(), refv) < 1e-10);

    // the same through the operator, and the workspace overload
    NufftOperator const op(n, ts);
    auto const via_op = op.adjoint(apply_window(op.forward(x), w));
    CHECK(oracle::rel_max_error(got.values(), via_op.values()) < 1e-10);
    Fft2 fft(2 * n);
    Image out(n);
    kernel.apply(x.values(), out.values(), fft);
    CHECK(oracle::rel_max_error(out.values(), refv) < 1e-10);
  }
}

TEST_CASE("normal kernels are linear in the weights")
{
  std::mt19937_64 rng(9);
  int const n = 8;
  auto const ts = golden_angle_trajectories(1, 3, 16, pi);
  std::vector<double> const w{0.3, 1.0, 0.5};
  NormalKernel sum(n);
  for (std::size_t i = 0; i < ts.size(); ++i) { sum.accumulate(NormalKernel::from_samples(n, ts[i].samples), w[i]); }
  auto const direct = NormalKernel::from_trajectories(n, ts, w);
  auto const x = oracle::random_image(n, rng);
  CHECK(oracle::rel_max_error(sum.apply(x).values(), direct.apply(x).values()) < 1e-12);
  CHECK_THROWS_AS(sum.accumulate(NormalKernel(4), 1.0), ValidationError);
}
