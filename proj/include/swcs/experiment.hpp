#pragma once

#include "core.hpp"
#include "metrics.hpp"
#include "phantoms.hpp"
#include "pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace swcs {

namespace fs = std::filesystem;

enum class ExperimentKind
{
  Gaussians,
  SheppLogan,
  External,
};

std::string to_string(ExperimentKind k);

struct TrajectorySpec
{
  int image_size = 256;
  int samples = 512;
  int total = 1000;
  double k_max = 3.141592653589793;
};

struct GaussianSettings
{
  double sigma = 4.0;
  double velocity = 0.064;
  int t_min = -500; // frame m images time t = t_min + m - 1
};

struct SheppLoganSettings
{
  double speed = 0.01;
  double slice_thickness = 0.04;
  int center_frame = 350;
  double fov = 2.0;
};

struct ExternalSettings
{
  std::string kspace;       // k-space binary
  std::string trajectories; // trajectory CSV
  double noise_sigma = 0.0; // per component, for the default epsilon
};

struct SweepSettings
{
  std::vector<int> komp_atoms;
  std::vector<double> bregman_lambda1;
  std::vector<double> bregman_lambda2;
};

struct ReportSettings
{
  std::vector<double> speeds;        // Shepp-Logan table columns
  std::vector<double> sigmas;        // Gaussian resolution study
  std::vector<double> velocities;    // Gaussian resolution study
  std::vector<std::string> solvers{"none", "komp", "bregman"};
  bool tune = false;                 // pick K / (lambda1, lambda2) per cell by the sweep grid
};

struct ExperimentConfig
{
  ExperimentKind kind = ExperimentKind::Gaussians;
  std::uint64_t seed = 1;
  TrajectorySpec trajectory;
  GaussianSettings gaussians;
  SheppLoganSettings shepp_logan;
  ExternalSettings external;
  double noise = 0.0; // relative noise sigma
  SwcsConfig reconstruction;
  std::vector<int> frames; // empty: every frame
  SeparabilityConfig separability;
  SweepSettings sweep;
  ReportSettings report;
  bool previews = true;

  /// Nested invariants; messages name the offending field by path.
  void validate() const;

  GaussianPhantomSpec gaussian_spec() const;
  SheppLoganSpec shepp_logan_spec() const;
  /// Requested frames, or 1..total when none were listed.
  std::vector<int> frame_list() const;
};

/// Parses a config document. A run manifest is accepted too; its "config" member is used.
ExperimentConfig parse_config(std::string const &text);
ExperimentConfig load_config(fs::path const &path);
/// Canonical document: every field, fixed key order.
std::string dump_config(ExperimentConfig const &cfg);
std::uint64_t config_hash(ExperimentConfig const &cfg);

/// Parses "152,600" or "100-110" or a mix ("1,5-7").
std::vector<int> parse_frame_list(std::string const &text);

// ---------------------------------------------------------------------------

/// Golden-angle acquisition of the configured phantom with noise added.
Dataset simulate_dataset(ExperimentConfig const &cfg);

struct TruthFrame
{
  int frame = 0;
  int n = 0;
  std::vector<double> image;
  std::vector<std::uint8_t> mask;
};

/// Ground truth for a simulated frame. The Gaussian mask covers the whole image.
TruthFrame truth_frame(ExperimentConfig const &cfg, int frame);

/// Writes kspace.bin, trajectories.csv, truth/ and manifest.json into `dir`.
/// Files written before a failure are removed again.
void write_dataset(fs::path const &dir, ExperimentConfig const &cfg, Dataset const &data);

/// Reads a dataset directory written by write_dataset.
Dataset load_dataset(fs::path const &dir);
/// Reads the external k-space named by the config.
Dataset load_external(ExperimentConfig const &cfg);

/// Runs the sequence and writes per-frame images, logs and manifest.json into `dir`.
std::vector<FrameOutcome> write_reconstruction(fs::path const &dir, ExperimentConfig const &cfg,
                                               std::shared_ptr<Dataset const> data, std::vector<int> const &frames,
                                               int workers);

/// Reads recon and truth directories and writes rmse.csv, fwhm.csv and times.csv into `out`.
void write_metrics(fs::path const &recon_dir, fs::path const &truth_dir, fs::path const &out);

// ---------------------------------------------------------------------------

struct FrameScore
{
  int frame = 0;
  double estimate_rmse = 0.0;
  double recon_rmse = 0.0;
};

/// Reconstructs the frames with `recon` and scores them against the analytic truth.
std::vector<FrameScore> score_frames(ExperimentConfig const &cfg, std::shared_ptr<Dataset const> data,
                                     SwcsConfig const &recon, std::vector<int> const &frames, int workers);

struct SweepPoint
{
  SolverKind solver = SolverKind::Komp;
  int atoms = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<FrameScore> scores;
  double mean_rmse = 0.0;
};

/// Every K of the grid (KOMP) or every (lambda1, lambda2) pair (split-Bregman).
std::vector<SweepPoint> run_sweep(ExperimentConfig const &cfg, std::shared_ptr<Dataset const> data,
                                  SolverKind solver, int workers);
std::size_t best_point(std::vector<SweepPoint> const &points);
std::string sweep_csv(std::vector<SweepPoint> const &points);

struct TableCell
{
  double speed = 0.0;
  int frame = 0;
  std::string method; // estimate, komp, bregman
  double rmse = 0.0;
  std::string setting; // solver parameters used
};

/// Shepp-Logan RMSE table: one dataset per speed, each solver on the configured frames.
std::vector<TableCell> rmse_table(ExperimentConfig const &cfg, int workers);
/// Rows estimate / KOMP / Split-Bregman, one column per (speed, frame).
std::string rmse_table_csv(std::vector<TableCell> const &cells);

struct ResolutionResult
{
  double velocity = 0.0;
  double sigma = 0.0;
  std::string method; // truth, estimate, swcs
  EventTime t0, t1, t2, t3;
  double fwhm = 0.0; // at the first frame of the scan
  double theoretical_t0 = 0.0;
  double theoretical_t2 = 0.0;
};

/// Gaussian resolution study on the configured frames for one (velocity, sigma).
std::vector<ResolutionResult> resolution_study(ExperimentConfig const &cfg, int workers);
std::string resolution_csv(std::vector<ResolutionResult> const &rows);

} // namespace swcs
