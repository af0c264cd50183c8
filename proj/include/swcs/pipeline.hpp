#pragma once

#include "core.hpp"
#include "estimate.hpp"
#include "operators.hpp"
#include "solvers.hpp"
#include "trajectories.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace swcs {

/// A full acquisition: trajectories 1..M_total in acquisition order and their samples.
struct Dataset
{
  int n = 256;
  std::vector<Trajectory> trajectories;
  KSpaceData data;
  double noise_sigma = 0.0; // per real/imaginary component; 0 when unknown

  int total() const { return static_cast<int>(trajectories.size()); }
  void validate() const;
};

enum class SolverKind
{
  None,
  Komp,
  Bregman,
};

SolverKind parse_solver(std::string const &s);
std::string to_string(SolverKind s);

enum class EstimateMode
{
  Sliding, // x_M recomputed for every frame, centred on it
  Global,  // one x_M from the window centred on the acquisition, shared by all frames
};

struct SwcsConfig
{
  int estimate_spokes = 305; // M
  int residual_width = 72;   // nu; the residual window holds nu + 1 spokes
  SolverKind solver = SolverKind::Komp;
  EstimateMode estimate_mode = EstimateMode::Sliding;
  CgConfig estimate_cg{};
  KompConfig komp{};
  SplitBregmanConfig bregman{};
  std::optional<double> epsilon; // absolute bound on ||F dx - r||^2
  double epsilon_factor = 1.1;   // otherwise epsilon = factor * expected noise energy of the window
  bool warm_start = false;       // sequence driver: start CG from the previous frame's estimate
  std::size_t cache_bytes = std::size_t{768} << 20;

  void validate(int total) const;
};

struct FrameDiagnostics
{
  CgReport estimate;
  int estimate_first = 0, estimate_last = 0;
  int residual_first = 0, residual_last = 0;
  bool estimate_clamped = false;
  bool residual_clamped = false;
  bool warm_started = false;
  double epsilon = 0.0;
  double residual_energy = 0.0; // ||y_nu - F_nu x_M||^2
  std::optional<ResidualSolution> solver;
};

struct FrameResult
{
  int frame = 0;
  Image estimate; // x_M
  Image residual; // dx
  Image recon;    // x_nu = x_M + dx
  FrameDiagnostics diagnostics;
};

struct FrameOutcome
{
  int frame = 0;
  std::optional<FrameResult> result;
  std::string error;
};

/*
 * Per frame m0:
 *   1. Hamming-weighted CG least squares on the M spokes centred on m0 gives x_M;
 *   2. the nu + 1 spokes centred on m0 give the residual data r = y_nu - F_nu x_M;
 *   3. KOMP or split-Bregman recovers a sparse dx from r;
 *   4. x_nu = x_M + dx.
 * Normal operators of the windows are assembled from cached per-spoke Toeplitz kernels.
 */
class Reconstructor
{
public:
  Reconstructor(std::shared_ptr<Dataset const> data, SwcsConfig cfg);

  SwcsConfig const &config() const { return cfg_; }
  Dataset const &dataset() const { return *data_; }

  FrameResult reconstruct_frame(int m0, std::optional<Image> const &initial = std::nullopt) const;

  /// Step 1 alone: x_M and the window bookkeeping; dx = 0 and x_nu = x_M.
  FrameResult estimate_frame(int m0, std::optional<Image> const &initial = std::nullopt) const;
  /// Residual problem of the nu window around the frame of `res`, relative to its estimate.
  ResidualProblem residual_problem(FrameResult &res) const;
  /// Steps 3 and 4 with the given solver settings; fills dx, x_nu and the solver diagnostics.
  void solve_frame(FrameResult &res, ResidualProblem const &problem, SolverKind solver, KompConfig const &komp,
                   SplitBregmanConfig const &bregman) const;

  /// Frames are independent unless warm_start is set; with warm_start the frames are
  /// processed in the given order on one worker so the chain is reproducible.
  std::vector<FrameOutcome> reconstruct_sequence(std::vector<int> const &frames, int workers) const;

  /// Normal operator and right-hand side of the weighted window problem.
  std::pair<NormalKernel, Image> window_system(std::span<int const> members, std::span<double const> weights) const;

private:
  struct SpokeTerms
  {
    NormalKernel kernel; // F_m^H F_m
    Image adjoint;       // F_m^H y_m
  };
  std::shared_ptr<SpokeTerms const> spoke(int m) const;
  Image const &global_estimate(CgReport &report, WindowSelection &window) const;

  std::shared_ptr<Dataset const> data_;
  SwcsConfig cfg_;

  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::pair<std::shared_ptr<SpokeTerms const>, std::uint64_t>> cache_;
  mutable std::uint64_t tick_ = 0;

  mutable std::once_flag global_once_;
  mutable std::optional<Image> global_image_;
  mutable CgReport global_report_;
  mutable WindowSelection global_window_;
};

} // namespace swcs
