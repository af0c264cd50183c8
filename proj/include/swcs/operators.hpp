#pragma once

#include "core.hpp"

#include <vector>

namespace swcs {

/*
 * Non-uniform discrete Fourier transform
 *
 *   y(k) = sum_r x[r] exp(-i k . r)
 *
 * over pixel coordinates r centred on the image (pixel N/2 is the origin) and k in
 * radians per pixel. The sums are evaluated directly, one trajectory at a time, as a
 * pair of dense products with the separable exponentials exp(-i kx x) and exp(-i ky y).
 */
class NufftOperator
{
public:
  NufftOperator(int n, std::vector<Trajectory> trajectories);

  int image_size() const { return n_; }
  std::span<Trajectory const> trajectories() const { return trajectories_; }
  std::size_t total_samples() const;

  KSpaceData forward(Image const &x) const;
  Image adjoint(KSpaceData const &y) const;

  /// Restriction to trajectories [first, first + count) of this operator.
  NufftOperator subset(std::size_t first, std::size_t count) const;

private:
  int n_;
  std::vector<Trajectory> trajectories_;
};

/// 0.54 - 0.46 cos(2 pi m / M).
double hamming_weight(double m, double M);

/// Per-trajectory weights h_M(m) for a window of `count` trajectories, indexed from the
/// window start with M = count - 1 so the central trajectory receives weight 1.
std::vector<double> hamming_window(int count);

/// Scale every sample of trajectory i by weights[i].
KSpaceData apply_window(KSpaceData y, std::span<double const> weights);

/*
 * Normal operator F^H diag(w) F of a non-uniform DFT, applied by Toeplitz embedding.
 *
 * (F^H diag(w) F x)(r) = sum_r' T(r - r') x(r'),   T(d) = sum_s w_s exp(i k_s . d)
 *
 * T is tabulated exactly for |dx|, |dy| < N, embedded in a 2N x 2N circulant and stored
 * as its (real, since T is Hermitian) spectrum. Kernels are linear in w, so the kernel of
 * a window is the weighted sum of per-trajectory kernels.
 */
class NormalKernel
{
public:
  NormalKernel() = default;
  explicit NormalKernel(int n);

  /// Kernel of the given samples, each with the same weight.
  static NormalKernel from_samples(int n, std::span<KPoint const> samples, double weight = 1.0);
  static NormalKernel from_trajectories(int n, std::span<Trajectory const> trajectories, std::span<double const> weights);

  int image_size() const { return n_; }
  std::span<double const> spectrum() const { return spectrum_; }

  /// this += weight * other
  void accumulate(NormalKernel const &other, double weight);

  /// Apply to an image; allocates FFT workspace per call.
  Image apply(Image const &x) const;

  /// Apply with caller-provided workspace of (2N)^2 entries.
  void apply(std::span<Cx const> x, std::span<Cx> out, class Fft2 &fft) const;

private:
  int n_ = 0;
  std::vector<double> spectrum_; // already divided by (2N)^2
};

} // namespace swcs
