#include "swcs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

namespace swcs {

double rmse(std::span<double const> recon, std::span<double const> truth, std::span<std::uint8_t const> mask)
{
  if (recon.size() != truth.size() || recon.size() != mask.size()) {
    throw ValidationError("rmse: reconstruction, truth and mask sizes differ");
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    if (!mask[i]) { continue; }
    double const d = recon[i] - truth[i];
    acc += d * d;
    ++count;
  }
  if (count == 0) { throw ValidationError("rmse: mask is empty"); }
  return std::sqrt(acc / static_cast<double>(count));
}

std::vector<double> center_profile(Image const &img)
{
  int const n = img.size();
  std::vector<double> p(n);
  for (int x = 0; x < n; ++x) { p[x] = std::abs(img(n / 2, x)); }
  return p;
}

double fwhm(std::span<double const> profile)
{
  if (profile.size() < 3) { throw ValidationError("fwhm: profile too short"); }
  auto const peak_it = std::max_element(profile.begin(), profile.end());
  auto const peak = static_cast<std::size_t>(peak_it - profile.begin());
  double const half = *peak_it / 2.0;
  if (!(*peak_it > 0.0)) { throw ValidationError("fwhm: profile has no positive maximum"); }

  std::optional<double> left, right;
  for (std::size_t j = peak; j-- > 0;) {
    if (profile[j] < half) {
      left = static_cast<double>(j) + (half - profile[j]) / (profile[j + 1] - profile[j]);
      break;
    }
  }
  for (std::size_t j = peak + 1; j < profile.size(); ++j) {
    if (profile[j] < half) {
      right = static_cast<double>(j - 1) + (profile[j - 1] - half) / (profile[j - 1] - profile[j]);
      break;
    }
  }
  if (!left || !right) { throw ValidationError("fwhm: no half-maximum crossing on one side of the peak"); }
  return *right - *left;
}

std::string EventTime::to_string() const
{
  switch (status) {
  case Status::Measured: return fmt::format("{}", frame);
  case Status::Unresolved: return "unresolved";
  case Status::NotReached: return "not_reached";
  }
  return "";
}

std::vector<double> interpolate_profile(std::span<double const> profile, int factor)
{
  if (factor < 1) { throw ValidationError("interpolate_profile: factor must be >= 1"); }
  std::size_t const n = profile.size();
  if (factor == 1 || n < 2) { return {profile.begin(), profile.end()}; }
  std::size_t const fine = n * static_cast<std::size_t>(factor);
  std::vector<Cx> twiddle(fine);
  for (std::size_t m = 0; m < fine; ++m) {
    twiddle[m] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(fine));
  }
  // spectrum on frequencies -n/2 .. n/2, the Nyquist term split between +n/2 and -n/2
  std::vector<Cx> spec(n);
  for (std::size_t k = 0; k < n; ++k) {
    Cx acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) { acc += profile[j] * std::conj(twiddle[(k * j * factor) % fine]); }
    spec[k] = acc / static_cast<double>(n);
  }
  std::vector<double> out(fine);
  for (std::size_t i = 0; i < fine; ++i) {
    double acc = spec[0].real();
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) { acc += 2.0 * (spec[k] * twiddle[(k * i) % fine]).real(); }
    if (n % 2 == 0) { acc += (spec[n / 2] * twiddle[(n / 2 * i) % fine]).real(); }
    out[i] = acc;
  }
  return out;
}

bool has_two_peaks(std::span<double const> profile, SeparabilityConfig const &cfg)
{
  if (profile.size() < 3) { return false; }
  auto const p = interpolate_profile(profile, cfg.upsampling);
  double const top = *std::max_element(p.begin(), p.end());
  if (!(top > 0.0)) { return false; }
  // local maxima; plateaus count once, at their first sample
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] >= cfg.min_peak_ratio * top) {
      std::size_t j = i;
      while (j + 1 < p.size() && p[j + 1] == p[i]) { ++j; }
      if (j + 1 < p.size() && p[j + 1] < p[i]) { peaks.push_back(i); }
      i = j;
    }
  }
  double const depth = cfg.dip_depth * top;
  for (std::size_t a = 0; a < peaks.size(); ++a) {
    for (std::size_t b = a + 1; b < peaks.size(); ++b) {
      double const dip = *std::min_element(p.begin() + static_cast<std::ptrdiff_t>(peaks[a]),
                                           p.begin() + static_cast<std::ptrdiff_t>(peaks[b]) + 1);
      if (std::min(p[peaks[a]], p[peaks[b]]) - dip > depth) { return true; }
    }
  }
  return false;
}

bool midpoint_above_half(std::span<double const> profile, int upsampling)
{
  if (profile.empty()) { return false; }
  auto const p = interpolate_profile(profile, upsampling);
  double const top = *std::max_element(p.begin(), p.end());
  return profile[profile.size() / 2] >= 0.5 * top;
}

namespace {

void sort_frames(std::vector<ProfileFrame> &frames)
{
  std::sort(frames.begin(), frames.end(), [](auto const &a, auto const &b) { return a.t < b.t; });
}

} // namespace

std::pair<EventTime, EventTime> midpoint_half_max_times(std::vector<ProfileFrame> frames, int upsampling)
{
  sort_frames(frames);
  std::vector<ProfileFrame const *> neg, pos;
  for (auto const &f : frames) {
    if (f.t < 0) { neg.push_back(&f); }
    if (f.t > 0) { pos.push_back(&f); }
  }
  bool const ever_resolved = std::any_of(frames.begin(), frames.end(), [upsampling](auto const &f) {
    return !midpoint_above_half(f.profile, upsampling);
  });
  if (!ever_resolved) { return {EventTime::unresolved(), EventTime::unresolved()}; }

  EventTime t0 = EventTime::not_reached();
  for (std::size_t i = 1; i < neg.size(); ++i) {
    if (midpoint_above_half(neg[i]->profile, upsampling) && !midpoint_above_half(neg[i - 1]->profile, upsampling)) {
      t0 = EventTime::at(neg[i]->t);
      break;
    }
  }
  if (!neg.empty() && midpoint_above_half(neg.front()->profile, upsampling) && !t0.measured()) {
    // already merged when the approaching side starts
    t0 = EventTime::unresolved();
  }

  EventTime t1 = EventTime::not_reached();
  for (std::size_t i = pos.size(); i-- > 1;) {
    if (midpoint_above_half(pos[i - 1]->profile, upsampling) && !midpoint_above_half(pos[i]->profile, upsampling)) {
      t1 = EventTime::at(pos[i - 1]->t);
      break;
    }
  }
  if (!pos.empty() && midpoint_above_half(pos.back()->profile, upsampling) && !t1.measured()) { t1 = EventTime::unresolved(); }
  return {t0, t1};
}

std::pair<EventTime, EventTime> separability_times(std::vector<ProfileFrame> frames, SeparabilityConfig const &cfg)
{
  sort_frames(frames);
  EventTime t2 = EventTime::unresolved();
  EventTime t3 = EventTime::unresolved();
  for (auto const &f : frames) {
    if (f.t < 0 && has_two_peaks(f.profile, cfg)) { t2 = EventTime::at(f.t); }
  }
  for (auto const &f : frames) {
    if (f.t > 0 && has_two_peaks(f.profile, cfg)) {
      t3 = EventTime::at(f.t);
      break;
    }
  }
  return {t2, t3};
}

namespace {

// max over x of exp(-(x - a)^2 / 2s^2) + exp(-(x + a)^2 / 2s^2), x >= 0
double two_gaussian_max(double a, double s)
{
  auto const f = [&](double x) {
    return std::exp(-(x - a) * (x - a) / (2 * s * s)) + std::exp(-(x + a) * (x + a) / (2 * s * s));
  };
  // golden-section search on [0, a + 3s]; the profile is unimodal on x >= 0
  double lo = 0.0;
  double hi = a + 3.0 * s;
  double const g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 200; ++i) {
    double const m1 = hi - g * (hi - lo);
    double const m2 = lo + g * (hi - lo);
    if (f(m1) < f(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return f(0.5 * (lo + hi));
}

} // namespace

double theoretical_t0(GaussianPhantomSpec const &spec)
{
  spec.validate();
  double const s = spec.sigma;
  if (spec.velocity == 0.0) { return -std::numeric_limits<double>::infinity(); }
  // midpoint 2 exp(-a^2 / 2s^2) equals half the maximum at a unique separation a* > s
  auto const g = [&](double a) { return 2.0 * std::exp(-a * a / (2 * s * s)) - 0.5 * two_gaussian_max(a, s); };
  double lo = s;
  double hi = 10.0 * s;
  for (int i = 0; i < 200; ++i) {
    double const mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return -0.5 * (lo + hi) / spec.velocity;
}

double theoretical_t2(GaussianPhantomSpec const &spec)
{
  spec.validate();
  if (spec.velocity == 0.0) { return -std::numeric_limits<double>::infinity(); }
  return -spec.sigma / spec.velocity;
}

} // namespace swcs
