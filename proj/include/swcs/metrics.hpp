#pragma once

#include "core.hpp"
#include "phantoms.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swcs {

/// Root mean square of (recon - truth) over the pixels where mask != 0.
double rmse(std::span<double const> recon, std::span<double const> truth, std::span<std::uint8_t const> mask);

/// Magnitude of the row through the image centre (y = 0); sample i sits at x = i - N/2.
std::vector<double> center_profile(Image const &img);

/// Width between the half-maximum crossings either side of the global maximum,
/// each located by linear interpolation. Throws if a side never drops below half.
double fwhm(std::span<double const> profile);

/// Frame at which a resolution event happens, or why it could not be measured.
struct EventTime
{
  enum class Status
  {
    Measured,
    Unresolved, // the Gaussians are never resolved within the sequence
    NotReached, // the sequence ends before the event
  };
  Status status = Status::NotReached;
  double frame = 0.0;

  bool measured() const { return status == Status::Measured; }
  std::string to_string() const;
  static EventTime at(double t) { return {Status::Measured, t}; }
  static EventTime unresolved() { return {Status::Unresolved, 0.0}; }
  static EventTime not_reached() { return {Status::NotReached, 0.0}; }
};

struct ProfileFrame
{
  int t = 0;
  std::vector<double> profile;
};

struct SeparabilityConfig
{
  double dip_depth = 1e-3;     // dip below the lower peak, relative to the profile maximum
  double min_peak_ratio = 0.5; // second peak must reach this fraction of the profile maximum
  int upsampling = 8;          // trigonometric interpolation factor before the peak search
};

/// Trigonometric (band-limited, periodic) interpolation onto a grid `factor` times finer;
/// sample j * factor of the result equals input sample j.
std::vector<double> interpolate_profile(std::span<double const> profile, int factor);

/// True if the interpolated profile holds two maxima separated by a strict dip.
bool has_two_peaks(std::span<double const> profile, SeparabilityConfig const &cfg = {});

/// True if the value at x = 0 is at least half of the interpolated profile maximum.
bool midpoint_above_half(std::span<double const> profile, int upsampling = 8);

/// t0: first t < 0 (approaching) where the midpoint reaches half maximum;
/// t1: last t > 0 (parting) where it still does. Frames may arrive in any order.
std::pair<EventTime, EventTime> midpoint_half_max_times(std::vector<ProfileFrame> frames, int upsampling = 8);

/// t2: last t < 0 with two separable peaks; t3: first t > 0 with two separable peaks.
std::pair<EventTime, EventTime> separability_times(std::vector<ProfileFrame> frames, SeparabilityConfig const &cfg = {});

/// Closed-form times for the continuous two-Gaussian phantom (unrounded frames).
double theoretical_t0(GaussianPhantomSpec const &spec);
double theoretical_t2(GaussianPhantomSpec const &spec);

} // namespace swcs
