#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fftw3.h>
#include <numbers>
#include <unistd.h>

namespace oracle {

std::vector<Cx> direct_ndft(swcs::Image const &x, std::span<swcs::KPoint const> k)
{
  int const n = x.size();
  std::vector<Cx> out(k.size());
  for (std::size_t s = 0; s < k.size(); ++s) {
    Cx acc{0.0, 0.0};
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        double const phase = -(k[s].kx * (ix - n / 2) + k[s].ky * (iy - n / 2));
        acc += x(iy, ix) * std::polar(1.0, phase);
      }
    }
    out[s] = acc;
  }
  return out;
}

std::vector<Cx> cartesian_spectrum(swcs::Image const &x)
{
  int const n = x.size();
  std::vector<Cx> buf(x.values().begin(), x.values().end());
  auto *p = reinterpret_cast<fftw_complex *>(buf.data());
  fftw_plan plan = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<Cx> out(buf.size());
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      int const fu = u - n / 2;
      int const fv = v - n / 2;
      // shift of the pixel origin to the image centre
      double const sign = ((fu + fv) % 2 == 0) ? 1.0 : -1.0;
      out[static_cast<std::size_t>(v) * n + u] = sign * buf[static_cast<std::size_t>((fv + n) % n) * n + (fu + n) % n];
    }
  }
  return out;
}

swcs::Image inverse_cartesian(std::vector<Cx> const &spectrum, int n)
{
  std::vector<Cx> buf(spectrum.size());
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      int const fu = u - n / 2;
      int const fv = v - n / 2;
      double const sign = ((fu + fv) % 2 == 0) ? 1.0 : -1.0;
      buf[static_cast<std::size_t>((fv + n) % n) * n + (fu + n) % n] = sign * spectrum[static_cast<std::size_t>(v) * n + u];
    }
  }
  auto *p = reinterpret_cast<fftw_complex *>(buf.data());
  fftw_plan plan = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  for (auto &v : buf) { v /= static_cast<double>(n) * n; }
  return swcs::Image(n, std::move(buf));
}

std::vector<swcs::Trajectory> cartesian_rows(int n)
{
  std::vector<swcs::Trajectory> rows;
  for (int v = 0; v < n; ++v) {
    swcs::Trajectory t;
    t.index = v + 1;
    t.frame = v + 1;
    for (int u = 0; u < n; ++u) {
      t.samples.push_back({2.0 * std::numbers::pi * (u - n / 2) / n, 2.0 * std::numbers::pi * (v - n / 2) / n});
    }
    rows.push_back(std::move(t));
  }
  return rows;
}

Eigen::MatrixXcd dense_matrix(int n, std::span<swcs::Trajectory const> trajectories)
{
  std::size_t rows = 0;
  for (auto const &t : trajectories) { rows += t.samples.size(); }
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(rows), n * n);
  Eigen::Index r = 0;
  for (auto const &t : trajectories) {
    for (auto const &k : t.samples) {
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          a(r, iy * n + ix) = std::polar(1.0, -(k.kx * (ix - n / 2) + k.ky * (iy - n / 2)));
        }
      }
      ++r;
    }
  }
  return a;
}

Eigen::MatrixXcd dense_columns(int n, std::span<swcs::Trajectory const> trajectories, std::span<int const> pixels)
{
  std::size_t rows = 0;
  for (auto const &t : trajectories) { rows += t.samples.size(); }
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(pixels.size()));
  Eigen::Index r = 0;
  for (auto const &t : trajectories) {
    for (auto const &k : t.samples) {
      for (std::size_t c = 0; c < pixels.size(); ++c) {
        int const iy = pixels[c] / n;
        int const ix = pixels[c] % n;
        a(r, static_cast<Eigen::Index>(c)) = std::polar(1.0, -(k.kx * (ix - n / 2) + k.ky * (iy - n / 2)));
      }
      ++r;
    }
  }
  return a;
}

swcs::Image restricted_least_squares(int n, std::span<swcs::Trajectory const> trajectories,
                                     std::span<int const> pixels, swcs::KSpaceData const &r)
{
  Eigen::MatrixXcd const a = dense_columns(n, trajectories, pixels);
  Eigen::VectorXcd const c = a.colPivHouseholderQr().solve(to_vector(r));
  swcs::Image x(n);
  for (std::size_t i = 0; i < pixels.size(); ++i) { x[static_cast<std::size_t>(pixels[i])] = c(static_cast<Eigen::Index>(i)); }
  return x;
}

std::vector<int> omp_reference(Eigen::MatrixXcd const &a, Eigen::VectorXcd const &r, int steps,
                               Eigen::VectorXcd &coefficients)
{
  std::vector<int> support;
  Eigen::VectorXcd resid = r;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd const corr = a.adjoint() * resid;
    int best = -1;
    double best_mag = 0.0;
    for (Eigen::Index j = 0; j < corr.size(); ++j) {
      if (std::find(support.begin(), support.end(), static_cast<int>(j)) != support.end()) { continue; }
      double const m = std::abs(corr(j));
      if (m > best_mag) {
        best_mag = m;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) { break; }
    support.push_back(best);
    Eigen::MatrixXcd as(a.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) { as.col(static_cast<Eigen::Index>(i)) = a.col(support[i]); }
    coefficients = as.colPivHouseholderQr().solve(r);
    resid = r - as * coefficients;
  }
  return support;
}

swcs::Image sparse_image(int n, int k, std::mt19937_64 &rng, std::vector<int> *support)
{
  std::uniform_int_distribution<int> pick(0, n * n - 1);
  std::uniform_real_distribution<double> mag(1.0, 2.0);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  std::vector<int> s;
  while (static_cast<int>(s.size()) < k) {
    int const p = pick(rng);
    if (std::find(s.begin(), s.end(), p) == s.end()) { s.push_back(p); }
  }
  swcs::Image x(n);
  for (int p : s) { x[static_cast<std::size_t>(p)] = std::polar(mag(rng), phase(rng)); }
  std::sort(s.begin(), s.end());
  if (support) { *support = s; }
  return x;
}

swcs::Image random_image(int n, std::mt19937_64 &rng)
{
  std::normal_distribution<double> g;
  swcs::Image x(n);
  for (auto &v : x.values()) { v = Cx{g(rng), g(rng)}; }
  return x;
}

swcs::KSpaceData random_data(std::span<swcs::Trajectory const> trajectories, std::mt19937_64 &rng)
{
  std::normal_distribution<double> g;
  swcs::KSpaceData y;
  for (auto const &t : trajectories) {
    auto &s = y.samples.emplace_back(t.samples.size());
    for (auto &v : s) { v = Cx{g(rng), g(rng)}; }
  }
  return y;
}

Eigen::VectorXcd to_vector(swcs::Image const &x)
{
  Eigen::VectorXcd v(static_cast<Eigen::Index>(x.pixels()));
  for (std::size_t i = 0; i < x.pixels(); ++i) { v(static_cast<Eigen::Index>(i)) = x[i]; }
  return v;
}

Eigen::VectorXcd to_vector(swcs::KSpaceData const &y)
{
  Eigen::VectorXcd v(static_cast<Eigen::Index>(y.total_samples()));
  Eigen::Index i = 0;
  for (auto const &t : y.samples) {
    for (auto const &s : t) { v(i++) = s; }
  }
  return v;
}

double rel_max_error(std::span<Cx const> a, std::span<Cx const> b)
{
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

double rel_l2_error(std::span<Cx const> a, std::span<Cx const> b)
{
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

TempDir::TempDir(std::string const &tag)
{
  static std::atomic<int> counter{0};
  path = std::filesystem::temp_directory_path() /
         ("swcs_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
}

TempDir::~TempDir()
{
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

} // namespace oracle
