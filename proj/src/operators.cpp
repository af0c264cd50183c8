#include "swcs/operators.hpp"
#include "swcs/fft.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace swcs {

namespace {

using CxMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;
using CxRowMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CxVec = Eigen::Matrix<Cx, Eigen::Dynamic, 1>;

// E(s, i) = exp(sign * i * k_s * (i - N/2))
CxMat exponentials(std::span<KPoint const> samples, int n, double KPoint::*axis, double sign)
{
  CxMat e(static_cast<Eigen::Index>(samples.size()), n);
  for (int i = 0; i < n; ++i) {
    double const r = i - n / 2;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      e(static_cast<Eigen::Index>(s), i) = std::polar(1.0, sign * samples[s].*axis * r);
    }
  }
  return e;
}

// E(s, j) = exp(i k_s d_j) over circulant lags d_j = j (j < N), j - 2N (j > N); column N is zero.
CxMat lag_exponentials(std::span<KPoint const> samples, int n, double KPoint::*axis)
{
  CxMat e = CxMat::Zero(static_cast<Eigen::Index>(samples.size()), 2 * n);
  for (int j = 0; j < 2 * n; ++j) {
    if (j == n) { continue; }
    double const d = j < n ? j : j - 2 * n;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      e(static_cast<Eigen::Index>(s), j) = std::polar(1.0, samples[s].*axis * d);
    }
  }
  return e;
}

} // namespace

NufftOperator::NufftOperator(int n, std::vector<Trajectory> trajectories)
  : n_(n)
  , trajectories_(std::move(trajectories))
{
  if (n < 2) { throw ValidationError(fmt::format("operator image size must be >= 2, got {}", n)); }
  double const lim = std::numbers::pi * (1.0 + 1e-12);
  for (auto const &t : trajectories_) {
    for (auto const &k : t.samples) {
      if (!(std::abs(k.kx) <= lim && std::abs(k.ky) <= lim)) {
        throw ValidationError(
          fmt::format("trajectory {}: sample ({}, {}) outside [-pi, pi]^2", t.index, k.kx, k.ky));
      }
    }
  }
}

std::size_t NufftOperator::total_samples() const
{
  std::size_t n = 0;
  for (auto const &t : trajectories_) { n += t.samples.size(); }
  return n;
}

KSpaceData NufftOperator::forward(Image const &x) const
{
  if (x.size() != n_) {
    throw ValidationError(fmt::format("forward: image size {} does not match operator size {}", x.size(), n_));
  }
  Eigen::Map<CxRowMat const> img(x.data(), n_, n_); // img(y, x)
  KSpaceData out;
  out.samples.reserve(trajectories_.size());
  for (auto const &t : trajectories_) {
    CxMat const ex = exponentials(t.samples, n_, &KPoint::kx, -1.0);
    CxMat const ey = exponentials(t.samples, n_, &KPoint::ky, -1.0);
    CxMat const z = ex * img.transpose(); // z(s, y) = sum_x ex(s, x) img(y, x)
    CxVec const v = ey.cwiseProduct(z).rowwise().sum();
    out.samples.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

Image NufftOperator::adjoint(KSpaceData const &y) const
{
  check_shape(y, trajectories_);
  Image out(n_);
  Eigen::Map<CxRowMat> img(out.data(), n_, n_);
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    auto const &t = trajectories_[i];
    CxMat const ex = exponentials(t.samples, n_, &KPoint::kx, -1.0);
    CxMat const ey = exponentials(t.samples, n_, &KPoint::ky, -1.0);
    Eigen::Map<CxVec const> d(y.samples[i].data(), static_cast<Eigen::Index>(y.samples[i].size()));
    img.noalias() += ey.adjoint() * (d.asDiagonal() * ex.conjugate());
  }
  return out;
}

NufftOperator NufftOperator::subset(std::size_t first, std::size_t count) const
{
  if (first + count > trajectories_.size()) { throw ValidationError("operator subset out of range"); }
  return NufftOperator(n_,
                       std::vector<Trajectory>(trajectories_.begin() + static_cast<std::ptrdiff_t>(first),
                                               trajectories_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

double hamming_weight(double m, double M)
{
  return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * m / M);
}

std::vector<double> hamming_window(int count)
{
  if (count < 1) { throw ValidationError("hamming_window: count must be >= 1"); }
  if (count == 1) { return {1.0}; }
  std::vector<double> w(count);
  for (int j = 0; j < count; ++j) { w[j] = hamming_weight(j, count - 1); }
  return w;
}

KSpaceData apply_window(KSpaceData y, std::span<double const> weights)
{
  if (weights.size() != y.samples.size()) {
    throw ValidationError(
      fmt::format("apply_window: {} weights for {} trajectories", weights.size(), y.samples.size()));
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (auto &v : y.samples[i]) { v *= weights[i]; }
  }
  return y;
}

NormalKernel::NormalKernel(int n)
  : n_(n)
  , spectrum_(static_cast<std::size_t>(4) * n * n, 0.0)
{
  if (n < 2) { throw ValidationError("NormalKernel: image size must be >= 2"); }
}

NormalKernel NormalKernel::from_samples(int n, std::span<KPoint const> samples, double weight)
{
  NormalKernel k(n);
  if (samples.empty() || weight == 0.0) { return k; }
  CxMat const ex = lag_exponentials(samples, n, &KPoint::kx);
  CxMat const ey = lag_exponentials(samples, n, &KPoint::ky);
  Fft2 fft(2 * n);
  auto buf = fft.buffer();
  Eigen::Map<CxRowMat> c(buf.data(), 2 * n, 2 * n); // c(jy, jx)
  c.noalias() = ey.transpose() * ex;
  fft.forward();
  double const scale = weight / (4.0 * n * n);
  for (std::size_t i = 0; i < k.spectrum_.size(); ++i) { k.spectrum_[i] = buf[i].real() * scale; }
  return k;
}

NormalKernel NormalKernel::from_trajectories(int n, std::span<Trajectory const> trajectories,
                                             std::span<double const> weights)
{
  if (weights.size() != trajectories.size()) { throw ValidationError("NormalKernel: weight count mismatch"); }
  NormalKernel k(n);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    k.accumulate(from_samples(n, trajectories[i].samples), weights[i]);
  }
  return k;
}

void NormalKernel::accumulate(NormalKernel const &other, double weight)
{
  if (other.n_ != n_) { throw ValidationError("NormalKernel: size mismatch in accumulate"); }
  for (std::size_t i = 0; i < spectrum_.size(); ++i) { spectrum_[i] += weight * other.spectrum_[i]; }
}

Image NormalKernel::apply(Image const &x) const
{
  Image out(n_, x.frame());
  Fft2 fft(2 * n_);
  apply(x.values(), out.values(), fft);
  return out;
}

void NormalKernel::apply(std::span<Cx const> x, std::span<Cx> out, Fft2 &fft) const
{
  std::size_t const n = static_cast<std::size_t>(n_);
  if (x.size() != n * n || out.size() != n * n) {
    throw ValidationError("NormalKernel::apply: image size mismatch");
  }
  if (fft.size() != 2 * n_) { throw ValidationError("NormalKernel::apply: workspace size mismatch"); }
  auto buf = fft.buffer();
  std::fill(buf.begin(), buf.end(), Cx{0.0, 0.0});
  for (std::size_t y = 0; y < n; ++y) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(y * n), n, buf.begin() + static_cast<std::ptrdiff_t>(y * 2 * n));
  }
  fft.forward();
  for (std::size_t i = 0; i < buf.size(); ++i) { buf[i] *= spectrum_[i]; }
  fft.inverse();
  for (std::size_t y = 0; y < n; ++y) {
    std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(y * 2 * n), n, out.begin() + static_cast<std::ptrdiff_t>(y * n));
  }
}

} // namespace swcs
