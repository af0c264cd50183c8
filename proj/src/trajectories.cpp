#include "swcs/trajectories.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

namespace swcs {

double golden_angle_increment() { return std::numbers::pi / std::numbers::phi; }

double golden_angle(long m)
{
  if (m < 0) { throw ValidationError(fmt::format("golden_angle: index must be >= 0, got {}", m)); }
  // Reduce in long double so that large m keeps the spokes distinct.
  long double const inc = std::numbers::pi_v<long double> / std::numbers::phi_v<long double>;
  long double const a = std::fmod(static_cast<long double>(m) * inc, std::numbers::pi_v<long double>);
  return static_cast<double>(a);
}

std::vector<KPoint> make_spoke(double angle, int samples, double k_max)
{
  if (samples < 2 || samples % 2 != 0) {
    throw ValidationError(fmt::format("spoke sample count must be even and >= 2, got {}", samples));
  }
  if (!(k_max > 0.0) || k_max > std::numbers::pi) {
    throw ValidationError(fmt::format("k_max must lie in (0, pi], got {}", k_max));
  }
  double const c = std::cos(angle);
  double const s = std::sin(angle);
  double const step = 2.0 * k_max / samples;
  std::vector<KPoint> out(samples);
  for (int j = 0; j < samples; ++j) {
    double const r = (j - samples / 2) * step;
    out[j] = {r * c, r * s};
  }
  return out;
}

std::vector<Trajectory> golden_angle_trajectories(int first, int count, int samples, double k_max)
{
  std::vector<Trajectory> out;
  out.reserve(count);
  for (int m = first; m < first + count; ++m) {
    double const a = golden_angle(m);
    out.push_back(Trajectory{m, a, m, make_spoke(a, samples, k_max)});
  }
  return out;
}

WindowSelection sliding_window(int center, int width, int total)
{
  if (total < 1) { throw ValidationError("sliding_window: total must be >= 1"); }
  if (center < 1 || center > total) {
    throw ValidationError(fmt::format("sliding_window: center {} outside [1, {}]", center, total));
  }
  if (width <= 0 || width % 2 != 0) {
    throw ValidationError(fmt::format("sliding_window: width must be positive and even, got {}", width));
  }
  if (width >= total) {
    throw ValidationError(fmt::format("sliding_window: width {} must be < total {}", width, total));
  }
  int const half = width / 2;
  int lo = center - half;
  int hi = center + half;
  bool clamped = false;
  if (lo < 1) {
    hi += 1 - lo;
    lo = 1;
    clamped = true;
  }
  if (hi > total) {
    lo -= hi - total;
    hi = total;
    clamped = true;
  }
  lo = std::max(lo, 1);
  WindowSelection w{center, half, {}, clamped};
  w.members.reserve(hi - lo + 1);
  for (int m = lo; m <= hi; ++m) { w.members.push_back(m); }
  return w;
}

void write_trajectory_csv(std::ostream &os, std::span<Trajectory const> trajectories)
{
  os << "m,theta,sample_index,kx,ky\n";
  for (auto const &t : trajectories) {
    for (std::size_t j = 0; j < t.samples.size(); ++j) {
      os << fmt::format("{},{:.17g},{},{:.17g},{:.17g}\n", t.index, t.angle, j, t.samples[j].kx, t.samples[j].ky);
    }
  }
}

namespace {

template <typename T>
T parse_field(std::string_view s, std::size_t line)
{
  T v{};
  auto const [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw IoError(fmt::format("trajectory CSV line {}: cannot parse '{}'", line, s));
  }
  return v;
}

} // namespace

std::vector<Trajectory> read_trajectory_csv(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line) || line.rfind("m,theta,sample_index,kx,ky", 0) != 0) {
    throw IoError("trajectory CSV: missing header 'm,theta,sample_index,kx,ky'");
  }
  std::vector<Trajectory> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) { continue; }
    std::string_view rest = line;
    std::string_view f[5];
    for (int i = 0; i < 5; ++i) {
      auto const comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i == 4)) {
        throw IoError(fmt::format("trajectory CSV line {}: expected 5 fields", lineno));
      }
      f[i] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    int const m = parse_field<int>(f[0], lineno);
    double const theta = parse_field<double>(f[1], lineno);
    auto const j = parse_field<std::size_t>(f[2], lineno);
    KPoint const k{parse_field<double>(f[3], lineno), parse_field<double>(f[4], lineno)};
    if (out.empty() || out.back().index != m) {
      out.push_back(Trajectory{m, theta, m, {}});
    }
    if (j != out.back().samples.size()) {
      throw IoError(fmt::format("trajectory CSV line {}: sample_index {} out of order", lineno, j));
    }
    out.back().samples.push_back(k);
  }
  return out;
}

} // namespace swcs
