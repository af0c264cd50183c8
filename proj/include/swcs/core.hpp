#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace swcs {

using Cx = std::complex<double>;

/// Raised for invalid arguments, inconsistent shapes and bad configuration.
class ValidationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for unreadable, missing or corrupt files.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Two-dimensional k-space coordinate in radians per pixel.
struct KPoint
{
  double kx = 0.0;
  double ky = 0.0;
};

/// Square complex image, row-major (index = y * N + x). Pixel (N/2, N/2) is the origin.
class Image
{
public:
  Image() = default;
  explicit Image(int n, int frame = 0);
  Image(int n, std::vector<Cx> values, int frame = 0);

  int size() const { return n_; }
  std::size_t pixels() const { return values_.size(); }
  int frame() const { return frame_; }
  void set_frame(int frame) { frame_ = frame; }

  Cx &operator()(int y, int x) { return values_[static_cast<std::size_t>(y) * n_ + x]; }
  Cx const &operator()(int y, int x) const { return values_[static_cast<std::size_t>(y) * n_ + x]; }
  Cx &operator[](std::size_t i) { return values_[i]; }
  Cx const &operator[](std::size_t i) const { return values_[i]; }

  std::span<Cx> values() { return values_; }
  std::span<Cx const> values() const { return values_; }
  Cx *data() { return values_.data(); }
  Cx const *data() const { return values_.data(); }

  /// Pixel coordinate of column/row index i, centred so that index N/2 maps to 0.
  double coord(int i) const { return static_cast<double>(i - n_ / 2); }

  std::vector<double> magnitude() const;
  double norm() const;

  Image &operator+=(Image const &other);
  Image &operator-=(Image const &other);
  Image &operator*=(Cx s);

private:
  int n_ = 0;
  int frame_ = 0;
  std::vector<Cx> values_;
};

Image operator+(Image a, Image const &b);
Image operator-(Image a, Image const &b);
Image operator*(Cx s, Image a);

/// Hermitian inner product sum(conj(a) * b).
Cx dot(std::span<Cx const> a, std::span<Cx const> b);
double norm2(std::span<Cx const> a);

/// One k-space trajectory. For radial spokes all samples lie on a line through
/// the origin at `angle`; other sample sets (e.g. Cartesian lines) reuse the type.
struct Trajectory
{
  int index = 0;     // acquisition order m
  double angle = 0.; // radians, [0, pi)
  int frame = 0;     // one trajectory per frame
  std::vector<KPoint> samples;
};

/// Complex samples for an ordered set of trajectories, one vector per trajectory.
struct KSpaceData
{
  std::vector<std::vector<Cx>> samples;

  std::size_t trajectories() const { return samples.size(); }
  std::size_t total_samples() const;
  double max_abs() const;
};

/// Throws ValidationError unless every sample vector matches its trajectory.
void check_shape(KSpaceData const &data, std::span<Trajectory const> trajectories);

} // namespace swcs
