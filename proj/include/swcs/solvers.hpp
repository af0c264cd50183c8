#pragma once

#include "core.hpp"
#include "estimate.hpp"
#include "operators.hpp"

#include <string>
#include <vector>

namespace swcs {

/*
 * Sparse residual problem
 *
 *   find dx sparse with || F dx - r ||^2 <= epsilon,   r = y - F x_M
 *
 * held in image-domain form: the solvers only need G = F^H F (as a Toeplitz kernel),
 * b = F^H r and ||r||^2, since || F dx - r ||^2 = ||r||^2 - 2 Re<dx, b> + <dx, G dx>.
 */
struct ResidualProblem
{
  NormalKernel normal; // F^H F
  Image correlation;   // F^H r
  double data_energy = 0.0; // ||r||^2
  double epsilon = 0.0;

  int image_size() const { return normal.image_size(); }
  void validate() const;

  /// || F dx - r ||^2
  double data_misfit(Image const &dx) const;
};

/// r = y - F x_M.
KSpaceData residual_data(KSpaceData const &y, NufftOperator const &op, Image const &estimate);

ResidualProblem make_residual_problem(KSpaceData const &residual, NufftOperator const &op, NormalKernel normal,
                                      double epsilon);
ResidualProblem make_residual_problem(KSpaceData const &residual, NufftOperator const &op, double epsilon);

/// Magnitude shrinkage v * max(|v| - tau, 0) / |v|.
Cx soft_threshold(Cx v, double tau);

struct KompConfig
{
  int atoms_per_iteration = 64; // K
  int max_iterations = 20;
  CgConfig inner{100, 1e-8};

  void validate() const;
};

struct SplitBregmanConfig
{
  double lambda1 = 1.0;  // coupling weight
  double lambda2 = 0.01; // l1 weight; shrinkage threshold is lambda2 / (2 lambda1)
  int outer_iterations = 10;
  int inner_sweeps = 1; // dx/u alternations per Bregman data update
  CgConfig inner{50, 1e-4};

  void validate() const;
};

struct SolveStep
{
  int iteration = 0;
  double residual_norm = 0.0; // || F dx - r ||
  double support_size = 0.0;  // KOMP
  double objective = 0.0;     // split-Bregman
};

struct ResidualSolution
{
  Image delta;
  std::vector<SolveStep> steps;
  int iterations = 0;
  bool empty_selection = false; // KOMP found no column with non-zero correlation
  bool reached_epsilon = false;
  /// Split-Bregman objective after every half step (dx update, u update), grouped by
  /// outer iteration. Used to check the alternation is monotone.
  std::vector<std::vector<double>> sweep_objectives;
  std::vector<int> support; // KOMP support, in selection order
};

/// K-fold orthogonal matching pursuit: each iteration adds the K pixels with the largest
/// |F^H (r - F dx)| to the support, then solves least squares on the support by CG.
ResidualSolution komp_solve(ResidualProblem const &p, KompConfig const &cfg);

/// Split-Bregman iteration for  ||F dx - r||^2 + lambda1 ||u - dx||^2 + lambda2 ||u||_1
/// with dx by CG, u by soft thresholding, and the data updated by the residual after
/// each outer iteration.
ResidualSolution split_bregman_solve(ResidualProblem const &p, SplitBregmanConfig const &cfg);

/// Diagnostics CSV "iteration,residual_norm,support_size" or "iteration,residual_norm,objective".
std::string diagnostics_csv(ResidualSolution const &s, bool komp);

} // namespace swcs
