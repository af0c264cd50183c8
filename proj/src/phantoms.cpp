#include "swcs/phantoms.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <random>

namespace swcs {

void GaussianPhantomSpec::validate() const
{
  if (!(sigma > 0.0)) { throw ValidationError(fmt::format("gaussian.sigma must be > 0, got {}", sigma)); }
  if (!(velocity >= 0.0)) { throw ValidationError(fmt::format("gaussian.velocity must be >= 0, got {}", velocity)); }
  if (t_min >= t_max) { throw ValidationError(fmt::format("gaussian frame range [{}, {}] is empty", t_min, t_max)); }
  if (n < 2) { throw ValidationError(fmt::format("gaussian.n must be >= 2, got {}", n)); }
}

double gaussian_value(GaussianPhantomSpec const &spec, double t, double x, double y)
{
  double const mu = spec.velocity * t;
  double const s2 = 2.0 * spec.sigma * spec.sigma;
  return std::exp(-((x - mu) * (x - mu) + y * y) / s2) + std::exp(-((x + mu) * (x + mu) + y * y) / s2);
}

Image gaussian_frame(GaussianPhantomSpec const &spec, int t)
{
  spec.validate();
  if (t < spec.t_min || t > spec.t_max) {
    throw ValidationError(fmt::format("gaussian_frame: t = {} outside [{}, {}]", t, spec.t_min, spec.t_max));
  }
  Image img(spec.n, t);
  for (int iy = 0; iy < spec.n; ++iy) {
    for (int ix = 0; ix < spec.n; ++ix) { img(iy, ix) = gaussian_value(spec, t, img.coord(ix), img.coord(iy)); }
  }
  return img;
}

std::vector<Cx> gaussian_kspace(GaussianPhantomSpec const &spec, int t, std::span<KPoint const> samples)
{
  spec.validate();
  if (t < spec.t_min || t > spec.t_max) {
    throw ValidationError(fmt::format("gaussian_kspace: t = {} outside [{}, {}]", t, spec.t_min, spec.t_max));
  }
  double const s2 = spec.sigma * spec.sigma;
  double const mu = spec.velocity * t;
  std::vector<Cx> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto const [kx, ky] = samples[i];
    double const env = 2.0 * std::numbers::pi * s2 * std::exp(-0.5 * s2 * (kx * kx + ky * ky));
    out[i] = Cx{env * 2.0 * std::cos(kx * mu), 0.0};
  }
  return out;
}

std::vector<Ellipsoid> kak_slaney_ellipsoids()
{
  // x0, y0, z0, a, b, c, angle, intensity
  return {
    {0.0, 0.0, 0.0, 0.69, 0.92, 0.9, 0.0, 2.0},
    {0.0, 0.0, 0.0, 0.6624, 0.874, 0.88, 0.0, -0.98},
    {-0.22, 0.0, -0.25, 0.41, 0.16, 0.21, 108.0, -0.02},
    {0.22, 0.0, -0.25, 0.31, 0.11, 0.22, 72.0, -0.02},
    {0.0, 0.35, -0.25, 0.21, 0.25, 0.5, 0.0, 0.01},
    {0.0, 0.1, -0.25, 0.046, 0.046, 0.046, 0.0, 0.01},
    {-0.08, -0.65, -0.25, 0.046, 0.023, 0.02, 0.0, 0.01},
    {0.06, -0.65, -0.25, 0.046, 0.023, 0.02, 90.0, 0.01},
    {0.06, -0.105, 0.625, 0.056, 0.04, 0.1, 90.0, 0.02},
    {0.0, 0.1, 0.625, 0.056, 0.056, 0.1, 0.0, -0.02},
  };
}

void SheppLoganSpec::validate() const
{
  if (ellipsoids.empty()) { throw ValidationError("shepp_logan.ellipsoids must not be empty"); }
  for (std::size_t i = 0; i < ellipsoids.size(); ++i) {
    auto const &e = ellipsoids[i];
    if (!(e.a > 0.0 && e.b > 0.0 && e.c > 0.0)) {
      throw ValidationError(fmt::format("shepp_logan.ellipsoids[{}]: semi-axes must be > 0", i));
    }
    if (!std::isfinite(e.intensity)) {
      throw ValidationError(fmt::format("shepp_logan.ellipsoids[{}]: intensity must be finite", i));
    }
  }
  if (!(slice_thickness > 0.0)) { throw ValidationError("shepp_logan.slice_thickness must be > 0"); }
  if (!std::isfinite(speed)) { throw ValidationError("shepp_logan.speed must be finite"); }
  if (frames < 1) { throw ValidationError(fmt::format("shepp_logan.frames must be >= 1, got {}", frames)); }
  if (n < 2) { throw ValidationError(fmt::format("shepp_logan.n must be >= 2, got {}", n)); }
  if (!(fov > 0.0)) { throw ValidationError("shepp_logan.fov must be > 0"); }
}

double slice_position(int frame, SheppLoganSpec const &spec)
{
  return spec.slice_thickness * spec.speed * static_cast<double>(frame - spec.center_frame);
}

std::vector<SliceEllipse> slice_ellipses(std::span<Ellipsoid const> ellipsoids, double z)
{
  std::vector<SliceEllipse> out;
  for (auto const &e : ellipsoids) {
    double const dz = (z - e.z0) / e.c;
    if (std::abs(dz) >= 1.0) { continue; }
    double const s = std::sqrt(1.0 - dz * dz);
    out.push_back({e.x0, e.y0, e.a * s, e.b * s, e.angle_deg * std::numbers::pi / 180.0, e.intensity});
  }
  return out;
}

namespace {

// 2 J1(q) / q
double jinc(double q)
{
  if (std::abs(q) < 1e-4) { return 1.0 - q * q / 8.0; }
  return 2.0 * std::cyl_bessel_j(1.0, q) / q;
}

bool inside(SliceEllipse const &e, double x, double y)
{
  double const c = std::cos(e.angle_rad);
  double const s = std::sin(e.angle_rad);
  double const dx = x - e.x0;
  double const dy = y - e.y0;
  double const u = (dx * c + dy * s) / e.a;
  double const v = (-dx * s + dy * c) / e.b;
  return u * u + v * v <= 1.0;
}

} // namespace

std::vector<Cx> shepp_logan_slice_kspace(SheppLoganSpec const &spec, double z, std::span<KPoint const> samples)
{
  spec.validate();
  double const h = spec.pixel_size();
  auto const slice = slice_ellipses(spec.ellipsoids, z);
  std::vector<Cx> out(samples.size(), Cx{0.0, 0.0});
  for (auto const &e : slice) {
    double const c = std::cos(e.angle_rad);
    double const s = std::sin(e.angle_rad);
    double const amp = e.intensity * std::numbers::pi * e.a * e.b / (h * h);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      // physical angular frequency
      double const wx = samples[i].kx / h;
      double const wy = samples[i].ky / h;
      double const qu = e.a * (wx * c + wy * s);
      double const qv = e.b * (-wx * s + wy * c);
      double const q = std::sqrt(qu * qu + qv * qv);
      out[i] += amp * jinc(q) * std::polar(1.0, -(wx * e.x0 + wy * e.y0));
    }
  }
  return out;
}

Image shepp_logan_slice(SheppLoganSpec const &spec, double z)
{
  spec.validate();
  double const h = spec.pixel_size();
  auto const slice = slice_ellipses(spec.ellipsoids, z);
  Image img(spec.n);
  for (int iy = 0; iy < spec.n; ++iy) {
    double const y = img.coord(iy) * h;
    for (int ix = 0; ix < spec.n; ++ix) {
      double const x = img.coord(ix) * h;
      double v = 0.0;
      for (auto const &e : slice) {
        if (inside(e, x, y)) { v += e.intensity; }
      }
      img(iy, ix) = v;
    }
  }
  return img;
}

std::vector<std::uint8_t> shepp_logan_mask(SheppLoganSpec const &spec, double z)
{
  spec.validate();
  double const h = spec.pixel_size();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.n) * spec.n, 0);
  auto const slice = slice_ellipses(std::span(spec.ellipsoids).first(1), z);
  if (slice.empty()) { return mask; }
  for (int iy = 0; iy < spec.n; ++iy) {
    for (int ix = 0; ix < spec.n; ++ix) {
      double const x = (ix - spec.n / 2) * h;
      double const y = (iy - spec.n / 2) * h;
      mask[static_cast<std::size_t>(iy) * spec.n + ix] = inside(slice.front(), x, y) ? 1 : 0;
    }
  }
  return mask;
}

double noise_sigma(KSpaceData const &y, NoiseSpec const &spec)
{
  if (!(spec.relative_sigma >= 0.0)) { throw ValidationError("noise.relative_sigma must be >= 0"); }
  return spec.relative_sigma * y.max_abs();
}

KSpaceData add_noise(KSpaceData y, NoiseSpec const &spec)
{
  double const sd = noise_sigma(y, spec);
  if (sd == 0.0) { return y; }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, sd);
  for (auto &traj : y.samples) {
    for (auto &v : traj) {
      double const re = gauss(rng);
      double const im = gauss(rng);
      v += Cx{re, im};
    }
  }
  return y;
}

} // namespace swcs
