#include "swcs/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fmt/format.h>
#include <thread>

namespace swcs {

void Dataset::validate() const
{
  if (n < 2) { throw ValidationError(fmt::format("dataset image size must be >= 2, got {}", n)); }
  if (trajectories.empty()) { throw ValidationError("dataset has no trajectories"); }
  check_shape(data, trajectories);
  if (!(noise_sigma >= 0.0)) { throw ValidationError("dataset noise sigma must be >= 0"); }
}

SolverKind parse_solver(std::string const &s)
{
  if (s == "none") { return SolverKind::None; }
  if (s == "komp") { return SolverKind::Komp; }
  if (s == "bregman") { return SolverKind::Bregman; }
  throw ValidationError(fmt::format("unknown solver '{}' (expected komp, bregman or none)", s));
}

std::string to_string(SolverKind s)
{
  switch (s) {
  case SolverKind::None: return "none";
  case SolverKind::Komp: return "komp";
  case SolverKind::Bregman: return "bregman";
  }
  return "";
}

void SwcsConfig::validate(int total) const
{
  if (estimate_spokes < 3 || estimate_spokes % 2 == 0) {
    throw ValidationError(fmt::format("reconstruction.estimate_spokes must be odd and >= 3, got {}", estimate_spokes));
  }
  if (residual_width < 2 || residual_width % 2 != 0) {
    throw ValidationError(fmt::format("reconstruction.residual_width must be even and >= 2, got {}", residual_width));
  }
  if (residual_width >= estimate_spokes) {
    throw ValidationError(fmt::format("reconstruction.residual_width ({}) must be smaller than estimate_spokes ({})",
                                      residual_width, estimate_spokes));
  }
  if (estimate_spokes > total) {
    throw ValidationError(
      fmt::format("reconstruction.estimate_spokes ({}) exceeds the {} acquired trajectories", estimate_spokes, total));
  }
  if (epsilon && !(*epsilon >= 0.0)) { throw ValidationError("reconstruction.epsilon must be >= 0"); }
  if (!(epsilon_factor >= 0.0)) { throw ValidationError("reconstruction.epsilon_factor must be >= 0"); }
  estimate_cg.validate();
  if (solver == SolverKind::Komp) { komp.validate(); }
  if (solver == SolverKind::Bregman) { bregman.validate(); }
}

Reconstructor::Reconstructor(std::shared_ptr<Dataset const> data, SwcsConfig cfg)
  : data_(std::move(data))
  , cfg_(std::move(cfg))
{
  if (!data_) { throw ValidationError("Reconstructor: no dataset"); }
  data_->validate();
  cfg_.validate(data_->total());
}

std::shared_ptr<Reconstructor::SpokeTerms const> Reconstructor::spoke(int m) const
{
  {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(m);
    if (it != cache_.end()) {
      it->second.second = ++tick_;
      return it->second.first;
    }
  }
  auto const &traj = data_->trajectories[static_cast<std::size_t>(m - 1)];
  NufftOperator const op(data_->n, {traj});
  KSpaceData y;
  y.samples.push_back(data_->data.samples[static_cast<std::size_t>(m - 1)]);
  auto terms = std::make_shared<SpokeTerms const>(
    SpokeTerms{NormalKernel::from_samples(data_->n, traj.samples), op.adjoint(y)});

  std::size_t const entry = terms->kernel.spectrum().size() * sizeof(double) + terms->adjoint.pixels() * sizeof(Cx);
  std::size_t const capacity = std::max<std::size_t>(1, cfg_.cache_bytes / entry);
  std::lock_guard lock(cache_mutex_);
  auto [it, inserted] = cache_.try_emplace(m, terms, ++tick_);
  while (cache_.size() > capacity) {
    auto victim = std::min_element(cache_.begin(), cache_.end(),
                                   [](auto const &a, auto const &b) { return a.second.second < b.second.second; });
    cache_.erase(victim);
  }
  return it == cache_.end() ? terms : it->second.first;
}

std::pair<NormalKernel, Image> Reconstructor::window_system(std::span<int const> members,
                                                            std::span<double const> weights) const
{
  if (members.size() != weights.size()) { throw ValidationError("window_system: weight count mismatch"); }
  NormalKernel kernel(data_->n);
  Image rhs(data_->n);
  for (std::size_t i = 0; i < members.size(); ++i) {
    auto const terms = spoke(members[i]);
    double const w2 = weights[i] * weights[i];
    kernel.accumulate(terms->kernel, w2);
    auto dst = rhs.values();
    auto src = terms->adjoint.values();
    for (std::size_t j = 0; j < dst.size(); ++j) { dst[j] += w2 * src[j]; }
  }
  return {std::move(kernel), std::move(rhs)};
}

Image const &Reconstructor::global_estimate(CgReport &report, WindowSelection &window) const
{
  std::call_once(global_once_, [&] {
    int const total = data_->total();
    global_window_ = sliding_window((total + 1) / 2, cfg_.estimate_spokes - 1, total);
    auto const w = hamming_window(global_window_.count());
    auto [kernel, rhs] = window_system(global_window_.members, w);
    auto est = reconstruct_estimate(kernel, rhs, cfg_.estimate_cg);
    global_image_ = std::move(est.image);
    global_report_ = std::move(est.report);
  });
  report = global_report_;
  window = global_window_;
  return *global_image_;
}

FrameResult Reconstructor::estimate_frame(int m0, std::optional<Image> const &initial) const
{
  int const total = data_->total();
  if (m0 < 1 || m0 > total) { throw ValidationError(fmt::format("frame {} outside acquisition [1, {}]", m0, total)); }
  int const n = data_->n;
  FrameResult res{m0, Image(n, m0), Image(n, m0), Image(n, m0), {}};
  auto &diag = res.diagnostics;

  WindowSelection ew;
  if (cfg_.estimate_mode == EstimateMode::Global) {
    res.estimate = global_estimate(diag.estimate, ew);
  } else {
    ew = sliding_window(m0, cfg_.estimate_spokes - 1, total);
    auto const w = hamming_window(ew.count());
    auto [kernel, rhs] = window_system(ew.members, w);
    auto est = reconstruct_estimate(kernel, rhs, cfg_.estimate_cg, initial);
    res.estimate = std::move(est.image);
    diag.estimate = std::move(est.report);
    diag.warm_started = initial.has_value();
  }
  res.estimate.set_frame(m0);
  diag.estimate_first = ew.first();
  diag.estimate_last = ew.last();
  diag.estimate_clamped = ew.clamped;

  auto const rw = sliding_window(m0, cfg_.residual_width, total);
  diag.residual_first = rw.first();
  diag.residual_last = rw.last();
  diag.residual_clamped = rw.clamped;

  res.recon = res.estimate;
  return res;
}

ResidualProblem Reconstructor::residual_problem(FrameResult &res) const
{
  int const n = data_->n;
  auto &diag = res.diagnostics;
  auto const first = static_cast<std::ptrdiff_t>(diag.residual_first - 1);
  auto const count = static_cast<std::ptrdiff_t>(diag.residual_last - diag.residual_first + 1);
  std::vector<Trajectory> trajs(data_->trajectories.begin() + first, data_->trajectories.begin() + first + count);
  KSpaceData y;
  y.samples.assign(data_->data.samples.begin() + first, data_->data.samples.begin() + first + count);
  NufftOperator const op(n, std::move(trajs));
  KSpaceData const r = residual_data(y, op, res.estimate);

  NormalKernel normal(n);
  for (int m = diag.residual_first; m <= diag.residual_last; ++m) { normal.accumulate(spoke(m)->kernel, 1.0); }
  double const noise_energy = 2.0 * data_->noise_sigma * data_->noise_sigma * static_cast<double>(op.total_samples());
  diag.epsilon = cfg_.epsilon.value_or(cfg_.epsilon_factor * noise_energy);
  auto problem = make_residual_problem(r, op, std::move(normal), diag.epsilon);
  problem.correlation.set_frame(res.frame);
  diag.residual_energy = problem.data_energy;
  return problem;
}

void Reconstructor::solve_frame(FrameResult &res, ResidualProblem const &problem, SolverKind solver,
                                KompConfig const &komp, SplitBregmanConfig const &bregman) const
{
  if (solver == SolverKind::None) {
    res.residual = Image(data_->n, res.frame);
    res.diagnostics.solver.reset();
  } else {
    auto sol = solver == SolverKind::Komp ? komp_solve(problem, komp) : split_bregman_solve(problem, bregman);
    res.residual = sol.delta;
    res.diagnostics.solver = std::move(sol);
  }
  res.residual.set_frame(res.frame);
  res.recon = res.estimate + res.residual;
  res.recon.set_frame(res.frame);
}

FrameResult Reconstructor::reconstruct_frame(int m0, std::optional<Image> const &initial) const
{
  auto res = estimate_frame(m0, initial);
  if (cfg_.solver != SolverKind::None) {
    auto const problem = residual_problem(res);
    solve_frame(res, problem, cfg_.solver, cfg_.komp, cfg_.bregman);
  }
  return res;
}

std::vector<FrameOutcome> Reconstructor::reconstruct_sequence(std::vector<int> const &frames, int workers) const
{
  std::vector<FrameOutcome> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) { out[i].frame = frames[i]; }

  if (cfg_.warm_start) {
    std::optional<Image> previous;
    for (auto &slot : out) {
      try {
        slot.result = reconstruct_frame(slot.frame, previous);
        previous = slot.result->estimate;
      } catch (std::exception const &e) {
        slot.error = e.what();
      }
    }
    return out;
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        out[i].result = reconstruct_frame(out[i].frame);
      } catch (std::exception const &e) {
        out[i].error = e.what();
      }
    }
  };
  int const count = std::max(1, std::min<int>(workers, static_cast<int>(frames.size())));
  std::vector<std::jthread> pool;
  for (int w = 1; w < count; ++w) { pool.emplace_back(work); }
  work();
  return out;
}

} // namespace swcs
