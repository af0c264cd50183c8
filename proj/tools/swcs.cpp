#include "swcs/experiment.hpp"
#include "swcs/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <thread>

namespace {

using namespace swcs;
using json = nlohmann::ordered_json;

struct Options
{
  std::string config;
  std::string out;
  std::string dataset;
  std::string recon;
  std::string truth;
  std::string frames;
  std::string solver;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

ExperimentConfig configure(Options const &o)
{
  auto cfg = load_config(o.config);
  if (o.seed_set) { cfg.seed = o.seed; }
  if (!o.frames.empty()) { cfg.frames = parse_frame_list(o.frames); }
  if (!o.solver.empty()) { cfg.reconstruction.solver = parse_solver(o.solver); }
  cfg.validate();
  return cfg;
}

void ensure_dir(std::string const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) { throw IoError(fmt::format("cannot create '{}': {}", dir, ec.message())); }
}

void run_manifest(std::string const &dir, char const *kind, ExperimentConfig const &cfg, json extra)
{
  json m = {{"manifest", kind}, {"config_hash", fmt::format("{:016x}", config_hash(cfg))}};
  for (auto const &[k, v] : extra.items()) { m[k] = v; }
  m["config"] = json::parse(dump_config(cfg));
  io::write_text(fs::path(dir) / "manifest.json", m.dump(2) + "\n");
}

int simulate(Options const &o)
{
  auto const cfg = configure(o);
  auto const data = simulate_dataset(cfg);
  write_dataset(o.out, cfg, data);
  fmt::print("simulated {} trajectories x {} samples into {}\n", data.total(), cfg.trajectory.samples, o.out);
  return 0;
}

int reconstruct(Options const &o)
{
  auto const cfg = configure(o);
  std::shared_ptr<Dataset const> data;
  if (!o.dataset.empty()) {
    data = std::make_shared<Dataset const>(load_dataset(o.dataset));
  } else if (cfg.kind == ExperimentKind::External) {
    data = std::make_shared<Dataset const>(load_external(cfg));
  } else {
    throw ValidationError("reconstruct: --dataset is required for simulated experiments");
  }
  auto frames = cfg.frame_list();
  for (int m : frames) {
    if (m > data->total()) {
      throw ValidationError(fmt::format("frames: frame {} outside the dataset's {} trajectories", m, data->total()));
    }
  }
  auto const outcomes = write_reconstruction(o.out, cfg, data, frames, o.workers);
  int failed = 0;
  for (auto const &r : outcomes) {
    if (!r.result) {
      ++failed;
      fmt::print(stderr, "frame {} failed: {}\n", r.frame, r.error);
    }
  }
  fmt::print("reconstructed {} of {} frames into {}\n", outcomes.size() - failed, outcomes.size(), o.out);
  return 0;
}

int metrics(Options const &o)
{
  if (o.recon.empty() || o.truth.empty()) { throw ValidationError("metrics: --recon and --truth are required"); }
  write_metrics(o.recon, o.truth, o.out);
  fmt::print("metrics written to {}\n", o.out);
  return 0;
}

int sweep(Options const &o)
{
  auto const cfg = configure(o);
  auto const solver = cfg.reconstruction.solver;
  if (solver == SolverKind::None) { throw ValidationError("sweep: choose --solver komp or bregman"); }
  auto const data = std::make_shared<Dataset const>(simulate_dataset(cfg));
  auto const points = run_sweep(cfg, data, solver, o.workers);
  auto const best = best_point(points);
  ensure_dir(o.out);
  io::write_text(fs::path(o.out) / "grid.csv", sweep_csv(points));
  io::write_text(fs::path(o.out) / "best.csv", sweep_csv({points[best]}));
  run_manifest(o.out, "sweep", cfg, {{"points", points.size()}, {"best", best}});
  auto const &b = points[best];
  fmt::print("best of {} points: atoms={} lambda1={:g} lambda2={:g} mean RMSE {:.4f}\n", points.size(), b.atoms,
             b.lambda1, b.lambda2, b.mean_rmse);
  return 0;
}

int report(Options const &o)
{
  auto const cfg = configure(o);
  ensure_dir(o.out);
  if (cfg.kind == ExperimentKind::SheppLogan) {
    auto const cells = rmse_table(cfg, o.workers);
    std::string long_form = "speed,frame,method,rmse,setting\n";
    for (auto const &c : cells) {
      long_form += fmt::format("{:g},{},{},{:.6g},{}\n", c.speed, c.frame, c.method, c.rmse, c.setting);
    }
    auto const table = rmse_table_csv(cells);
    io::write_text(fs::path(o.out) / "rmse_table.csv", table);
    io::write_text(fs::path(o.out) / "rmse_cells.csv", long_form);
    run_manifest(o.out, "report", cfg, {{"table", "rmse_table.csv"}});
    fmt::print("{}", table);
  } else if (cfg.kind == ExperimentKind::Gaussians) {
    auto const rows = resolution_study(cfg, o.workers);
    auto const csv = resolution_csv(rows);
    io::write_text(fs::path(o.out) / "resolution.csv", csv);
    run_manifest(o.out, "report", cfg, {{"table", "resolution.csv"}});
    fmt::print("{}", csv);
  } else {
    throw ValidationError("report: external-kspace experiments have no ground truth to report against");
  }
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Sliding-window compressed-sensing reconstruction of dynamic radial MRI"};
  app.require_subcommand(1);
  Options o;

  auto const add_config = [&](CLI::App *cmd) { cmd->add_option("--config", o.config, "experiment config (JSON)")->required(); };
  auto const add_out = [&](CLI::App *cmd) { cmd->add_option("--out", o.out, "output directory")->required(); };
  auto const add_seed = [&](CLI::App *cmd) {
    cmd->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) {
        o.seed = s;
        o.seed_set = true;
      }, "RNG seed (overrides the config)");
  };
  auto const add_frames = [&](CLI::App *cmd) { cmd->add_option("--frames", o.frames, "frames, e.g. 152,600 or 100-120"); };
  auto const add_workers = [&](CLI::App *cmd) {
    cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  };
  auto const add_solver = [&](CLI::App *cmd) {
    cmd->add_option("--solver", o.solver, "residual solver")->check(CLI::IsMember({"komp", "bregman", "none"}));
  };

  auto *sim = app.add_subcommand("simulate", "synthesize a k-space dataset and its ground truth");
  add_config(sim);
  add_out(sim);
  add_seed(sim);
  add_frames(sim);

  auto *rec = app.add_subcommand("reconstruct", "reconstruct frames of a dataset");
  add_config(rec);
  add_out(rec);
  rec->add_option("--dataset", o.dataset, "dataset directory written by simulate");
  add_frames(rec);
  add_workers(rec);
  add_solver(rec);

  auto *met = app.add_subcommand("metrics", "score a reconstruction against ground truth");
  met->add_option("--recon", o.recon, "reconstruction directory")->required();
  met->add_option("--truth", o.truth, "dataset directory holding the truth")->required();
  add_out(met);

  auto *swp = app.add_subcommand("sweep", "grid search over K or (lambda1, lambda2)");
  add_config(swp);
  add_out(swp);
  add_seed(swp);
  add_frames(swp);
  add_workers(swp);
  add_solver(swp);

  auto *rep = app.add_subcommand("report", "RMSE table (shepp-logan) or resolution study (gaussians)");
  add_config(rep);
  add_out(rep);
  add_seed(rep);
  add_frames(rep);
  add_workers(rep);
  add_solver(rep);

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) { return simulate(o); }
    if (*rec) { return reconstruct(o); }
    if (*met) { return metrics(o); }
    if (*swp) { return sweep(o); }
    if (*rep) { return report(o); }
  } catch (ValidationError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (IoError const &e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 2;
  } catch (fs::filesystem_error const &e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return 2;
  } catch (std::exception const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
