#include "swcs/solvers.hpp"
#include "swcs/fft.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace swcs {

void ResidualProblem::validate() const
{
  if (correlation.size() != normal.image_size()) { throw ValidationError("residual problem: size mismatch"); }
  if (!(epsilon >= 0.0)) { throw ValidationError("residual problem: epsilon must be >= 0"); }
  if (!(data_energy >= 0.0)) { throw ValidationError("residual problem: data energy must be >= 0"); }
}

double ResidualProblem::data_misfit(Image const &dx) const
{
  Image const g = normal.apply(dx);
  double const e = data_energy - 2.0 * dot(dx.values(), correlation.values()).real() + dot(dx.values(), g.values()).real();
  return std::max(e, 0.0);
}

KSpaceData residual_data(KSpaceData const &y, NufftOperator const &op, Image const &estimate)
{
  check_shape(y, op.trajectories());
  KSpaceData r = op.forward(estimate);
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    for (std::size_t j = 0; j < r.samples[i].size(); ++j) { r.samples[i][j] = y.samples[i][j] - r.samples[i][j]; }
  }
  return r;
}

ResidualProblem make_residual_problem(KSpaceData const &residual, NufftOperator const &op, NormalKernel normal,
                                      double epsilon)
{
  if (normal.image_size() != op.image_size()) { throw ValidationError("residual problem: kernel size mismatch"); }
  ResidualProblem p{std::move(normal), op.adjoint(residual), 0.0, epsilon};
  for (auto const &t : residual.samples) { p.data_energy += norm2(t); }
  p.validate();
  return p;
}

ResidualProblem make_residual_problem(KSpaceData const &residual, NufftOperator const &op, double epsilon)
{
  std::vector<double> const ones(op.trajectories().size(), 1.0);
  return make_residual_problem(residual, op, NormalKernel::from_trajectories(op.image_size(), op.trajectories(), ones),
                               epsilon);
}

Cx soft_threshold(Cx v, double tau)
{
  if (tau < 0.0) { throw ValidationError("soft_threshold: tau must be >= 0"); }
  double const m = std::abs(v);
  if (m <= tau) { return Cx{0.0, 0.0}; }
  return v * ((m - tau) / m);
}

void KompConfig::validate() const
{
  if (atoms_per_iteration < 1) { throw ValidationError("komp.atoms_per_iteration must be >= 1"); }
  if (max_iterations < 1) { throw ValidationError("komp.max_iterations must be >= 1"); }
  inner.validate();
}

void SplitBregmanConfig::validate() const
{
  if (!(lambda1 > 0.0)) { throw ValidationError(fmt::format("bregman.lambda1 must be > 0, got {}", lambda1)); }
  if (!(lambda2 >= 0.0)) { throw ValidationError(fmt::format("bregman.lambda2 must be >= 0, got {}", lambda2)); }
  if (outer_iterations < 1) { throw ValidationError("bregman.outer_iterations must be >= 1"); }
  if (inner_sweeps < 1) { throw ValidationError("bregman.inner_sweeps must be >= 1"); }
  inner.validate();
}

namespace {

double misfit(ResidualProblem const &p, Image const &dx, Image const &g_dx)
{
  double const e = p.data_energy - 2.0 * dot(dx.values(), p.correlation.values()).real() +
                   dot(dx.values(), g_dx.values()).real();
  return std::max(e, 0.0);
}

} // namespace

ResidualSolution komp_solve(ResidualProblem const &p, KompConfig const &cfg)
{
  p.validate();
  cfg.validate();
  int const n = p.image_size();
  std::size_t const npix = static_cast<std::size_t>(n) * n;
  Fft2 fft(2 * n);

  ResidualSolution sol{Image(n, p.correlation.frame()), {}, 0, false, false, {}, {}};
  std::vector<char> in_support(npix, 0);
  Image corr = p.correlation; // F^H (r - F dx)
  Image g_dx(n);
  double energy = p.data_energy;
  sol.steps.push_back({0, std::sqrt(energy), 0.0, 0.0});

  std::vector<std::size_t> order(npix);
  std::vector<Cx> masked(npix);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (energy <= p.epsilon) {
      sol.reached_epsilon = true;
      break;
    }
    // candidates outside the support with non-zero correlation, largest first, ties by index
    order.clear();
    for (std::size_t j = 0; j < npix; ++j) {
      if (!in_support[j] && std::abs(corr[j]) > 0.0) { order.push_back(j); }
    }
    if (order.empty()) {
      sol.empty_selection = true;
      break;
    }
    std::size_t const take = std::min<std::size_t>(cfg.atoms_per_iteration, order.size());
    auto const by_corr = [&](std::size_t a, std::size_t b) {
      double const ma = std::abs(corr[a]);
      double const mb = std::abs(corr[b]);
      return ma != mb ? ma > mb : a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), by_corr);
    for (std::size_t i = 0; i < take; ++i) {
      in_support[order[i]] = 1;
      sol.support.push_back(static_cast<int>(order[i]));
    }

    // least squares restricted to the support, warm-started from the previous coefficients
    std::vector<Cx> rhs(npix, Cx{0.0, 0.0});
    for (std::size_t j = 0; j < npix; ++j) {
      if (in_support[j]) { rhs[j] = p.correlation[j]; }
    }
    LinearMap const A = [&](std::span<Cx const> in, std::span<Cx> out) {
      for (std::size_t j = 0; j < npix; ++j) { masked[j] = in_support[j] ? in[j] : Cx{0.0, 0.0}; }
      p.normal.apply(masked, out, fft);
      for (std::size_t j = 0; j < npix; ++j) {
        if (!in_support[j]) { out[j] = Cx{0.0, 0.0}; }
      }
    };
    conjugate_gradient(A, rhs, sol.delta.values(), cfg.inner);

    p.normal.apply(sol.delta.values(), g_dx.values(), fft);
    for (std::size_t j = 0; j < npix; ++j) { corr[j] = p.correlation[j] - g_dx[j]; }
    energy = misfit(p, sol.delta, g_dx);
    sol.iterations = it;
    sol.steps.push_back({it, std::sqrt(energy), static_cast<double>(sol.support.size()), 0.0});
  }
  if (energy <= p.epsilon) { sol.reached_epsilon = true; }
  return sol;
}

ResidualSolution split_bregman_solve(ResidualProblem const &p, SplitBregmanConfig const &cfg)
{
  p.validate();
  cfg.validate();
  int const n = p.image_size();
  std::size_t const npix = static_cast<std::size_t>(n) * n;
  Fft2 fft(2 * n);
  double const tau = cfg.lambda2 / (2.0 * cfg.lambda1);

  ResidualSolution sol{Image(n, p.correlation.frame()), {}, 0, false, false, {}, {}};
  Image &dx = sol.delta;
  Image u(n);
  Image g_dx(n);
  // Bregman data y_b = (j + 1) r - F D after j updates, D the sum of the dx used in them;
  // only F^H y_b and ||y_b||^2 are needed.
  Image breg = p.correlation;
  Image dsum(n);
  Image g_dsum(n);
  double updates = 0.0;

  auto ybreg_energy = [&] {
    double const m = updates + 1.0;
    return m * m * p.data_energy - 2.0 * m * dot(dsum.values(), p.correlation.values()).real() +
           dot(dsum.values(), g_dsum.values()).real();
  };
  auto objective = [&](double yb_energy) {
    double fit = yb_energy - 2.0 * dot(dx.values(), breg.values()).real() + dot(dx.values(), g_dx.values()).real();
    double couple = 0.0;
    double l1 = 0.0;
    for (std::size_t j = 0; j < npix; ++j) {
      couple += std::norm(u[j] - dx[j]);
      l1 += std::abs(u[j]);
    }
    return std::max(fit, 0.0) + cfg.lambda1 * couple + cfg.lambda2 * l1;
  };

  double energy = p.data_energy;
  sol.steps.push_back({0, std::sqrt(energy), 0.0, objective(ybreg_energy())});
  if (energy <= p.epsilon) {
    sol.reached_epsilon = true;
    return sol;
  }

  LinearMap const A = [&](std::span<Cx const> in, std::span<Cx> out) {
    p.normal.apply(in, out, fft);
    for (std::size_t j = 0; j < npix; ++j) { out[j] += cfg.lambda1 * in[j]; }
  };
  std::vector<Cx> rhs(npix);
  for (int outer = 1; outer <= cfg.outer_iterations; ++outer) {
    double const yb = ybreg_energy();
    auto &objs = sol.sweep_objectives.emplace_back();
    objs.push_back(objective(yb));
    for (int sweep = 0; sweep < cfg.inner_sweeps; ++sweep) {
      for (std::size_t j = 0; j < npix; ++j) { rhs[j] = breg[j] + cfg.lambda1 * u[j]; }
      conjugate_gradient(A, rhs, dx.values(), cfg.inner);
      p.normal.apply(dx.values(), g_dx.values(), fft);
      objs.push_back(objective(yb));
      for (std::size_t j = 0; j < npix; ++j) { u[j] = soft_threshold(dx[j], tau); }
      objs.push_back(objective(yb));
    }
    energy = misfit(p, dx, g_dx);
    sol.iterations = outer;
    sol.steps.push_back({outer, std::sqrt(energy), 0.0, objs.back()});
    if (energy <= p.epsilon) {
      sol.reached_epsilon = true;
      break;
    }
    // y_b += r - F dx
    for (std::size_t j = 0; j < npix; ++j) {
      breg[j] += p.correlation[j] - g_dx[j];
      dsum[j] += dx[j];
      g_dsum[j] += g_dx[j];
    }
    updates += 1.0;
  }
  return sol;
}

std::string diagnostics_csv(ResidualSolution const &s, bool komp)
{
  std::string out = komp ? "iteration,residual_norm,support_size\n" : "iteration,residual_norm,objective\n";
  for (auto const &st : s.steps) {
    out += komp ? fmt::format("{},{:.9e},{}\n", st.iteration, st.residual_norm, static_cast<long>(st.support_size))
                : fmt::format("{},{:.9e},{:.9e}\n", st.iteration, st.residual_norm, st.objective);
  }
  return out;
}

} // namespace swcs
