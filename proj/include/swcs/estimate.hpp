#pragma once

#include "core.hpp"
#include "operators.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace swcs {

struct CgConfig
{
  int max_iterations = 50;
  double tolerance = 1e-6; // on ||b - A x|| / ||b||

  void validate() const;
};

struct CgReport
{
  int iterations = 0;
  double residual = 0.0; // final relative residual
  bool converged = false;
  std::vector<double> history; // relative residual after each iteration, history[0] = start
};

/// y = A x for a Hermitian positive semi-definite A.
using LinearMap = std::function<void(std::span<Cx const>, std::span<Cx>)>;

/// Conjugate gradient on A x = b starting from the contents of x. Stops when the relative
/// residual drops below tolerance, at max_iterations, or on breakdown (p^H A p <= 0).
CgReport conjugate_gradient(LinearMap const &A, std::span<Cx const> b, std::span<Cx> x, CgConfig const &cfg);

struct EstimateResult
{
  Image image;
  CgReport report;
};

/// Windowed least squares  argmin_x || W F x - W y ||^2  by CG on the normal equations
/// F^H W^2 F x = F^H W^2 y. Non-convergence is reported in `report`, not thrown.
EstimateResult reconstruct_estimate(KSpaceData const &y, NufftOperator const &op, std::span<double const> weights,
                                    CgConfig const &cfg, std::optional<Image> const &initial = std::nullopt);

/// Same problem with the normal operator and right-hand side F^H W^2 y already formed.
EstimateResult reconstruct_estimate(NormalKernel const &normal, Image const &rhs, CgConfig const &cfg,
                                    std::optional<Image> const &initial = std::nullopt);

/// Convergence log as CSV rows "iteration,residual".
std::string convergence_csv(CgReport const &report);

} // namespace swcs
