#include "oracles.hpp"
#include "swcs/io.hpp"

#include <cstdlib>
#include <doctest.h>
#include <map>
#include <sys/wait.h>

namespace fs = std::filesystem;
using swcs::io::read_text;
using swcs::io::write_text;

namespace {

int run(std::string const &args, fs::path const &log)
{
  std::string const cmd = std::string(SWCS_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  int const status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Relative path -> contents of every regular file below `dir`.
std::map<std::string, std::string> snapshot(fs::path const &dir)
{
  std::map<std::string, std::string> out;
  for (auto const &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) { out[fs::relative(e.path(), dir).string()] = read_text(e.path()); }
  }
  return out;
}

std::string const small_config = R"({
  "experiment": "gaussians",
  "seed": 9,
  "trajectory": {"image_size": 16, "samples": 32, "total": 60},
  "gaussians": {"sigma": 2.0, "velocity": 0.1, "t_min": -30},
  "noise": {"relative_sigma": 0.001},
  "reconstruction": {"estimate_spokes": 31, "residual_width": 10, "solver": "komp",
                     "komp": {"atoms_per_iteration": 8, "max_iterations": 3},
                     "bregman": {"lambda1": 100, "lambda2": 1}},
  "frames": "15-45",
  "sweep": {"komp_atoms": [4, 16]},
  "report": {"sigmas": [2.0], "velocities": [0.1]}
}
)";

} // namespace

TEST_CASE("command line exit codes")
{
  oracle::TempDir dir("cli");
  auto const log = dir.path / "log.txt";
  auto const cfg = dir.path / "cfg.json";
  write_text(cfg, small_config);

  CHECK(run("", log) == 1);
  CHECK(run("--help", log) == 0);
  CHECK(run("simulate --help", log) == 0);
  CHECK(run("frobnicate", log) == 1);
  CHECK(run("simulate --out " + (dir.path / "x").string(), log) == 1); // --config missing
  CHECK(run("reconstruct --config " + cfg.string() + " --out x --dataset y --solver lasso", log) == 1);
  CHECK(run("reconstruct --config " + cfg.string() + " --out x --dataset y --workers 0", log) == 1);

  CHECK(run("simulate --config " + (dir.path / "missing.json").string() + " --out " + (dir.path / "d").string(), log) == 2);

  write_text(dir.path / "zero.json", R"({"trajectory": {"total": 0}})");
  CHECK(run("simulate --config " + (dir.path / "zero.json").string() + " --out " + (dir.path / "z").string(), log) == 1);
  CHECK(read_text(log).find("trajectory.total") != std::string::npos);

  write_text(dir.path / "typo.json", R"({"reconstruction": {"komp": {"atom": 3}}})");
  CHECK(run("simulate --config " + (dir.path / "typo.json").string() + " --out " + (dir.path / "t").string(), log) == 1);
  CHECK(read_text(log).find("reconstruction.komp.atom: unknown key") != std::string::npos);

  write_text(dir.path / "broken.json", "{\"seed\": ");
  CHECK(run("simulate --config " + (dir.path / "broken.json").string() + " --out " + (dir.path / "b").string(), log) == 1);

  CHECK(run("metrics --recon " + (dir.path / "nope").string() + " --truth " + (dir.path / "nope").string() + " --out " +
              (dir.path / "m").string(),
            log) == 2);
  CHECK(run("sweep --config " + cfg.string() + " --out " + (dir.path / "s").string() + " --solver none", log) == 1);
}

TEST_CASE("simulate, reconstruct, metrics, sweep and report")
{
  oracle::TempDir dir("cli");
  auto const log = dir.path / "log.txt";
  auto const cfg = (dir.path / "cfg.json").string();
  write_text(cfg, small_config);
  auto const d = (dir.path / "data").string();

  REQUIRE(run("simulate --config " + cfg + " --out " + d, log) == 0);
  REQUIRE(run("simulate --config " + cfg + " --out " + d + "2", log) == 0);
  CHECK(snapshot(d) == snapshot(d + "2"));
  REQUIRE(run("simulate --config " + cfg + " --out " + d + "3 --seed 10", log) == 0);
  CHECK(read_text(d + "/kspace.bin") != read_text(d + "3/kspace.bin"));

  auto const r = (dir.path / "rec").string();
  REQUIRE(run("reconstruct --config " + cfg + " --dataset " + d + " --out " + r + " --frames 20,40 --workers 2", log) == 0);
  int recon_files = 0;
  for (auto const &e : fs::directory_iterator(fs::path(r) / "frames")) {
    if (e.path().string().ends_with("_recon.f32")) { ++recon_files; }
  }
  CHECK(recon_files == 2);
  CHECK(fs::exists(fs::path(r) / "frames" / "frame_0020_recon.f32"));
  CHECK(fs::exists(fs::path(r) / "frames" / "frame_0040_recon.f32"));

  REQUIRE(run("reconstruct --config " + cfg + " --dataset " + d + " --out " + r + "2 --frames 20,40 --workers 1", log) == 0);
  CHECK(snapshot(r) == snapshot(r + "2"));

  auto const none = (dir.path / "none").string();
  REQUIRE(run("reconstruct --config " + cfg + " --dataset " + d + " --out " + none + " --frames 30 --solver none", log) == 0);
  CHECK(read_text(none + "/frames/frame_0030_recon.f32") == read_text(none + "/frames/frame_0030_estimate.f32"));

  CHECK(run("reconstruct --config " + cfg + " --dataset " + d + " --out " + r + "3 --frames 61", log) == 1);
  CHECK(run("reconstruct --config " + cfg + " --out " + r + "4", log) == 1); // no dataset for a simulated experiment

  auto const m = (dir.path / "met").string();
  REQUIRE(run("metrics --recon " + r + " --truth " + d + " --out " + m, log) == 0);
  REQUIRE(run("metrics --recon " + r + " --truth " + d + " --out " + m + "2", log) == 0);
  CHECK(snapshot(m) == snapshot(m + "2"));
  CHECK(read_text(m + "/rmse.csv").rfind("frame,estimate_rmse,recon_rmse\n20,", 0) == 0);

  auto const s = (dir.path / "sweep").string();
  REQUIRE(run("sweep --config " + cfg + " --out " + s + " --frames 25,35 --solver komp", log) == 0);
  CHECK(fs::exists(s + "/grid.csv"));
  CHECK(fs::exists(s + "/best.csv"));
  CHECK(fs::exists(s + "/manifest.json"));

  auto const rep = (dir.path / "report").string();
  REQUIRE(run("report --config " + cfg + " --out " + rep + " --workers 2", log) == 0);
  REQUIRE(run("report --config " + cfg + " --out " + rep + "2 --workers 1", log) == 0);
  CHECK(snapshot(rep) == snapshot(rep + "2"));
  auto const csv = read_text(rep + "/resolution.csv");
  CHECK(csv.rfind("velocity,sigma,method,metric,value,theoretical\n", 0) == 0);

  // a run manifest reproduces the run
  auto const again = (dir.path / "again").string();
  REQUIRE(run("simulate --config " + d + "/manifest.json --out " + again, log) == 0);
  CHECK(snapshot(d) == snapshot(again));
}
