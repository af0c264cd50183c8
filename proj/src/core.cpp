#include "swcs/core.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace swcs {

Image::Image(int n, int frame)
  : n_(n)
  , frame_(frame)
  , values_(static_cast<std::size_t>(n) * n, Cx{0.0, 0.0})
{
  if (n < 2) { throw ValidationError(fmt::format("image size must be >= 2, got {}", n)); }
}

Image::Image(int n, std::vector<Cx> values, int frame)
  : n_(n)
  , frame_(frame)
  , values_(std::move(values))
{
  if (n < 2) { throw ValidationError(fmt::format("image size must be >= 2, got {}", n)); }
  if (values_.size() != static_cast<std::size_t>(n) * n) {
    throw ValidationError(fmt::format("image of size {} needs {} values, got {}", n, n * n, values_.size()));
  }
}

std::vector<double> Image::magnitude() const
{
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](Cx v) { return std::abs(v); });
  return out;
}

double Image::norm() const { return std::sqrt(norm2(values_)); }

Image &Image::operator+=(Image const &other)
{
  if (other.n_ != n_) { throw ValidationError("image size mismatch in +="); }
  for (std::size_t i = 0; i < values_.size(); ++i) { values_[i] += other.values_[i]; }
  return *this;
}

Image &Image::operator-=(Image const &other)
{
  if (other.n_ != n_) { throw ValidationError("image size mismatch in -="); }
  for (std::size_t i = 0; i < values_.size(); ++i) { values_[i] -= other.values_[i]; }
  return *this;
}

Image &Image::operator*=(Cx s)
{
  for (auto &v : values_) { v *= s; }
  return *this;
}

Image operator+(Image a, Image const &b) { return a += b; }
Image operator-(Image a, Image const &b) { return a -= b; }
Image operator*(Cx s, Image a) { return a *= s; }

Cx dot(std::span<Cx const> a, std::span<Cx const> b)
{
  if (a.size() != b.size()) { throw ValidationError("dot: length mismatch"); }
  Cx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) { acc += std::conj(a[i]) * b[i]; }
  return acc;
}

double norm2(std::span<Cx const> a)
{
  double acc = 0.0;
  for (auto v : a) { acc += std::norm(v); }
  return acc;
}

std::size_t KSpaceData::total_samples() const
{
  std::size_t n = 0;
  for (auto const &s : samples) { n += s.size(); }
  return n;
}

double KSpaceData::max_abs() const
{
  double m = 0.0;
  for (auto const &s : samples) {
    for (auto v : s) { m = std::max(m, std::abs(v)); }
  }
  return m;
}

void check_shape(KSpaceData const &data, std::span<Trajectory const> trajectories)
{
  if (data.samples.size() != trajectories.size()) {
    throw ValidationError(
      fmt::format("k-space data has {} trajectories, operator expects {}", data.samples.size(), trajectories.size()));
  }
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (data.samples[i].size() != trajectories[i].samples.size()) {
      throw ValidationError(fmt::format("trajectory {} has {} samples, expected {}",
                                        trajectories[i].index,
                                        data.samples[i].size(),
                                        trajectories[i].samples.size()));
    }
  }
}

} // namespace swcs
