#include "swcs/estimate.hpp"
#include "swcs/fft.hpp"

#include <cmath>
#include <fmt/format.h>

namespace swcs {

void CgConfig::validate() const
{
  if (max_iterations < 1) { throw ValidationError(fmt::format("cg.max_iterations must be >= 1, got {}", max_iterations)); }
  if (!(tolerance > 0.0 && tolerance < 1.0)) {
    throw ValidationError(fmt::format("cg.tolerance must lie in (0, 1), got {}", tolerance));
  }
}

CgReport conjugate_gradient(LinearMap const &A, std::span<Cx const> b, std::span<Cx> x, CgConfig const &cfg)
{
  cfg.validate();
  if (b.size() != x.size()) { throw ValidationError("conjugate_gradient: size mismatch"); }
  std::size_t const n = b.size();
  CgReport rep;
  double const bnorm = std::sqrt(norm2(b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), Cx{0.0, 0.0});
    rep.converged = true;
    rep.history.push_back(0.0);
    return rep;
  }

  std::vector<Cx> r(n), p(n), q(n);
  A(x, q);
  for (std::size_t i = 0; i < n; ++i) { r[i] = b[i] - q[i]; }
  p = r;
  double rr = norm2(r);
  rep.residual = std::sqrt(rr) / bnorm;
  rep.history.push_back(rep.residual);
  if (rep.residual < cfg.tolerance) {
    rep.converged = true;
    return rep;
  }

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    A(p, q);
    double const pq = dot(p, q).real();
    if (!(pq > 0.0)) { break; }
    double const alpha = rr / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    double const rr_new = norm2(r);
    rep.iterations = it;
    rep.residual = std::sqrt(rr_new) / bnorm;
    rep.history.push_back(rep.residual);
    if (rep.residual < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    double const beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) { p[i] = r[i] + beta * p[i]; }
  }
  return rep;
}

EstimateResult reconstruct_estimate(KSpaceData const &y, NufftOperator const &op, std::span<double const> weights,
                                    CgConfig const &cfg, std::optional<Image> const &initial)
{
  check_shape(y, op.trajectories());
  if (weights.size() != op.trajectories().size()) {
    throw ValidationError(fmt::format("reconstruct_estimate: {} weights for {} trajectories", weights.size(),
                                      op.trajectories().size()));
  }
  std::vector<double> w2(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) { w2[i] = weights[i] * weights[i]; }
  Image const rhs = op.adjoint(apply_window(apply_window(y, weights), weights));
  auto const normal = NormalKernel::from_trajectories(op.image_size(), op.trajectories(), w2);
  return reconstruct_estimate(normal, rhs, cfg, initial);
}

EstimateResult reconstruct_estimate(NormalKernel const &normal, Image const &rhs, CgConfig const &cfg,
                                    std::optional<Image> const &initial)
{
  int const n = normal.image_size();
  if (rhs.size() != n) { throw ValidationError("reconstruct_estimate: right-hand side size mismatch"); }
  EstimateResult res{Image(n, rhs.frame()), {}};
  if (initial) {
    if (initial->size() != n) { throw ValidationError("reconstruct_estimate: initial guess size mismatch"); }
    res.image = *initial;
    res.image.set_frame(rhs.frame());
  }
  Fft2 fft(2 * n);
  LinearMap const A = [&](std::span<Cx const> in, std::span<Cx> out) { normal.apply(in, out, fft); };
  res.report = conjugate_gradient(A, rhs.values(), res.image.values(), cfg);
  return res;
}

std::string convergence_csv(CgReport const &report)
{
  std::string out = "iteration,residual\n";
  for (std::size_t i = 0; i < report.history.size(); ++i) { out += fmt::format("{},{:.9e}\n", i, report.history[i]); }
  return out;
}

} // namespace swcs
