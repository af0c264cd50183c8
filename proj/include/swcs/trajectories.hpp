#pragma once

#include "core.hpp"

#include <iosfwd>
#include <vector>

namespace swcs {

/// Radial golden-angle increment pi / phi, about 111.246 degrees.
double golden_angle_increment();

/// Angle of the m-th spoke, (m * increment) mod pi.
double golden_angle(long m);

/// K samples on the diameter at `angle`, radii -k_max + j * 2 k_max / K for j = 0..K-1.
/// K must be even so that radius 0 occurs exactly once (at j = K/2).
std::vector<KPoint> make_spoke(double angle, int samples, double k_max);

/// Golden-angle spokes m = first..first+count-1, each at frame m.
std::vector<Trajectory> golden_angle_trajectories(int first, int count, int samples, double k_max);

struct WindowSelection
{
  int center = 0;
  int half_width = 0;
  std::vector<int> members; // 1-based acquisition indices, ascending
  bool clamped = false;     // true when the window was shifted to stay inside [1, total]

  int first() const { return members.front(); }
  int last() const { return members.back(); }
  int count() const { return static_cast<int>(members.size()); }
};

/// Window [m0 - width/2, m0 + width/2] over trajectories 1..total, shifted inward at the
/// sequence boundaries so it keeps width + 1 members whenever possible.
WindowSelection sliding_window(int center, int width, int total);

/// CSV with columns m,theta,sample_index,kx,ky.
void write_trajectory_csv(std::ostream &os, std::span<Trajectory const> trajectories);
std::vector<Trajectory> read_trajectory_csv(std::istream &is);

} // namespace swcs
