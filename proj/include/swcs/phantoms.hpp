#pragma once

#include "core.hpp"

#include <cstdint>
#include <vector>

namespace swcs {

// ---------------------------------------------------------------------------
// Two Gaussians approaching and parting along x (pixel units).

struct GaussianPhantomSpec
{
  double sigma = 4.0;    // pixels
  double velocity = 0.0; // pixels per frame; centres at x = +/- velocity * t
  int t_min = -500;
  int t_max = 499;
  int n = 256;

  void validate() const;
};

/// Rasterised frame at time t: exp(-((x - vt)^2 + y^2) / 2s^2) + exp(-((x + vt)^2 + y^2) / 2s^2).
Image gaussian_frame(GaussianPhantomSpec const &spec, int t);

/// Continuous Fourier transform of the same frame at the given k (radians per pixel).
std::vector<Cx> gaussian_kspace(GaussianPhantomSpec const &spec, int t, std::span<KPoint const> samples);

/// Value of the continuous frame at pixel coordinate (x, y).
double gaussian_value(GaussianPhantomSpec const &spec, double t, double x, double y);

// ---------------------------------------------------------------------------
// Three-dimensional Shepp-Logan phantom, imaged in a plane moving along z.

/// Ellipsoid in normalised phantom coordinates; `angle_deg` rotates the x/y axes about z.
struct Ellipsoid
{
  double x0, y0, z0;
  double a, b, c;
  double angle_deg;
  double intensity;
};

/// Kak-Slaney 3-D Shepp-Logan table. The first entry is the outer skull.
std::vector<Ellipsoid> kak_slaney_ellipsoids();

/// Cross-section of an ellipsoid at height z; absent when the plane misses it.
struct SliceEllipse
{
  double x0, y0;
  double a, b;
  double angle_rad;
  double intensity;
};

struct SheppLoganSpec
{
  std::vector<Ellipsoid> ellipsoids = kak_slaney_ellipsoids();
  double slice_thickness = 2.0 / 256.0; // phantom units
  double speed = 0.01;                  // slice thicknesses per frame
  int frames = 1000;
  int center_frame = 501; // frame whose plane passes through z = 0
  int n = 256;
  double fov = 2.0; // phantom units spanned by the image width

  double pixel_size() const { return fov / n; }
  void validate() const;
};

/// z(t) = thickness * speed * (t - center_frame).
double slice_position(int frame, SheppLoganSpec const &spec);

std::vector<SliceEllipse> slice_ellipses(std::span<Ellipsoid const> ellipsoids, double z);

/// Exact 2-D transform of the slice at height z, in the discrete normalisation of
/// NufftOperator::forward (pixel units): X(k) = sum_e rho_e * pi a b / h^2 * jinc(q) * exp(-i k . c / h).
std::vector<Cx> shepp_logan_slice_kspace(SheppLoganSpec const &spec, double z, std::span<KPoint const> samples);

/// Slice sampled at pixel centres.
Image shepp_logan_slice(SheppLoganSpec const &spec, double z);

/// Pixels inside the outer ellipse of the slice (true = foreground).
std::vector<std::uint8_t> shepp_logan_mask(SheppLoganSpec const &spec, double z);

// ---------------------------------------------------------------------------

struct NoiseSpec
{
  double relative_sigma = 0.0; // fraction of max |y|
  std::uint64_t seed = 0;
};

/// Standard deviation of each real/imaginary noise component for this data.
double noise_sigma(KSpaceData const &y, NoiseSpec const &spec);

/// Adds i.i.d. complex Gaussian noise, independent real and imaginary parts, each with
/// standard deviation relative_sigma * max|y|. Deterministic for a fixed seed.
KSpaceData add_noise(KSpaceData y, NoiseSpec const &spec);

} // namespace swcs
