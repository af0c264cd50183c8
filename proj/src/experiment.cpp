#include "swcs/experiment.hpp"

#include "swcs/io.hpp"
#include "swcs/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace swcs {

using json = nlohmann::ordered_json;

std::string to_string(ExperimentKind k)
{
  switch (k) {
  case ExperimentKind::Gaussians: return "gaussians";
  case ExperimentKind::SheppLogan: return "shepp-logan";
  case ExperimentKind::External: return "external-kspace";
  }
  return "";
}

namespace {

ExperimentKind parse_kind(std::string const &s, std::string const &path)
{
  if (s == "gaussians") { return ExperimentKind::Gaussians; }
  if (s == "shepp-logan") { return ExperimentKind::SheppLogan; }
  if (s == "external-kspace") { return ExperimentKind::External; }
  throw ValidationError(fmt::format("{}: unknown experiment '{}' (expected gaussians, shepp-logan or external-kspace)", path, s));
}

std::string to_string(EstimateMode m) { return m == EstimateMode::Global ? "global" : "sliding"; }

EstimateMode parse_mode(std::string const &s, std::string const &path)
{
  if (s == "sliding") { return EstimateMode::Sliding; }
  if (s == "global") { return EstimateMode::Global; }
  throw ValidationError(fmt::format("{}: unknown estimate mode '{}' (expected sliding or global)", path, s));
}

// Object reader that remembers which keys were consumed so leftovers can be reported.
class Reader
{
public:
  Reader(json const &j, std::string path)
    : j_(j)
    , path_(std::move(path))
  {
    if (!j_.is_object()) { throw ValidationError(fmt::format("{}: expected an object", name())); }
  }

  template <class T>
  void get(char const *key, T &out)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) { return; }
    out = convert<T>(*it, child(key));
  }

  json const *raw(char const *key)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<Reader> section(char const *key)
  {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) { return std::nullopt; }
    return Reader(*it, child(key));
  }

  void finish() const
  {
    for (auto const &[key, value] : j_.items()) {
      if (!seen_.contains(key)) { throw ValidationError(fmt::format("{}: unknown key", child(key))); }
    }
  }

private:
  std::string name() const { return path_.empty() ? "config" : path_; }
  std::string child(std::string const &key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  static T convert(json const &v, std::string const &path)
  {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) { throw ValidationError(fmt::format("{}: expected true or false", path)); }
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) { throw ValidationError(fmt::format("{}: expected a non-negative integer", path)); }
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      if (!v.is_number_unsigned()) { throw ValidationError(fmt::format("{}: expected a non-negative integer", path)); }
      return v.get<std::size_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) { throw ValidationError(fmt::format("{}: expected an integer", path)); }
      auto const x = v.get<std::int64_t>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) {
        throw ValidationError(fmt::format("{}: {} out of range", path, x));
      }
      return static_cast<T>(x);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) { throw ValidationError(fmt::format("{}: expected a number", path)); }
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) { throw ValidationError(fmt::format("{}: expected a string", path)); }
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) { return std::nullopt; }
      return convert<double>(v, path);
    } else {
      if (!v.is_array()) { throw ValidationError(fmt::format("{}: expected a list", path)); }
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], fmt::format("{}[{}]", path, i)));
      }
      return out;
    }
  }

  json const &j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_cg(Reader r, CgConfig &cg)
{
  r.get("max_iterations", cg.max_iterations);
  r.get("tolerance", cg.tolerance);
  r.finish();
}

json cg_json(CgConfig const &cg) { return {{"max_iterations", cg.max_iterations}, {"tolerance", cg.tolerance}}; }

void check(bool ok, std::string const &path, std::string const &what)
{
  if (!ok) { throw ValidationError(fmt::format("{}: {}", path, what)); }
}

void check_cg(CgConfig const &cg, std::string const &path)
{
  check(cg.max_iterations >= 1, path + ".max_iterations", "must be >= 1");
  check(cg.tolerance > 0.0 && cg.tolerance < 1.0, path + ".tolerance", "must lie in (0, 1)");
}

std::string frame_name(int m) { return fmt::format("frame_{:04d}", m); }

json parse_json(std::string const &text, std::string const &what)
{
  try {
    return json::parse(text);
  } catch (json::parse_error const &e) {
    throw ValidationError(fmt::format("{}: {}", what, e.what()));
  }
}

json load_manifest(fs::path const &path)
{
  if (!fs::exists(path)) { throw IoError(fmt::format("missing manifest '{}'", path.string())); }
  try {
    return json::parse(io::read_text(path));
  } catch (json::parse_error const &e) {
    throw IoError(fmt::format("corrupt manifest '{}': {}", path.string(), e.what()));
  }
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn const &fn)
{
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(count);
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (std::exception const &e) {
        errors[i] = e.what();
      }
    }
  };
  int const threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < threads; ++w) { pool.emplace_back(work); }
    work();
  }
  for (auto const &e : errors) {
    if (!e.empty()) { throw std::runtime_error(e); }
  }
}

double magnitude_rmse(Image const &img, TruthFrame const &truth)
{
  auto const mag = img.magnitude();
  return rmse(mag, truth.image, truth.mask);
}

double fwhm_or_nan(std::span<double const> profile)
{
  try {
    return fwhm(profile);
  } catch (ValidationError const &) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string csv_number(double v) { return std::isfinite(v) ? fmt::format("{:.6g}", v) : "nan"; }

} // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const
{
  check(trajectory.image_size >= 4 && trajectory.image_size % 2 == 0, "trajectory.image_size", "must be even and >= 4");
  check(trajectory.samples >= 2 && trajectory.samples % 2 == 0, "trajectory.samples", "must be even and >= 2");
  check(trajectory.total >= 1, "trajectory.total", "must be >= 1");
  check(trajectory.k_max > 0.0 && trajectory.k_max <= std::numbers::pi, "trajectory.k_max", "must lie in (0, pi]");
  check(noise >= 0.0, "noise.relative_sigma", "must be >= 0");

  if (kind == ExperimentKind::Gaussians) {
    check(gaussians.sigma > 0.0, "gaussians.sigma", "must be > 0");
    check(gaussians.velocity >= 0.0, "gaussians.velocity", "must be >= 0");
    check(trajectory.total >= 2, "trajectory.total", "needs at least two frames for a moving phantom");
  }
  if (kind == ExperimentKind::SheppLogan) {
    check(shepp_logan.slice_thickness > 0.0, "shepp_logan.slice_thickness", "must be > 0");
    check(std::isfinite(shepp_logan.speed), "shepp_logan.speed", "must be finite");
    check(shepp_logan.fov > 0.0, "shepp_logan.fov", "must be > 0");
  }
  if (kind == ExperimentKind::External) {
    check(!external.kspace.empty(), "external.kspace", "must name a k-space file");
    check(!external.trajectories.empty(), "external.trajectories", "must name a trajectory CSV");
    check(external.noise_sigma >= 0.0, "external.noise_sigma", "must be >= 0");
  }

  for (std::size_t i = 0; i < frames.size(); ++i) {
    check(frames[i] >= 1 && frames[i] <= trajectory.total, fmt::format("frames[{}]", i),
          fmt::format("frame {} outside [1, {}]", frames[i], trajectory.total));
  }

  auto const &r = reconstruction;
  check(r.estimate_spokes >= 3 && r.estimate_spokes % 2 == 1, "reconstruction.estimate_spokes", "must be odd and >= 3");
  check(r.estimate_spokes <= trajectory.total, "reconstruction.estimate_spokes",
        fmt::format("exceeds the {} acquired trajectories", trajectory.total));
  check(r.residual_width >= 2 && r.residual_width % 2 == 0, "reconstruction.residual_width", "must be even and >= 2");
  check(r.residual_width < r.estimate_spokes, "reconstruction.residual_width", "must be smaller than estimate_spokes");
  check(!r.epsilon || *r.epsilon >= 0.0, "reconstruction.epsilon", "must be >= 0");
  check(r.epsilon_factor >= 0.0, "reconstruction.epsilon_factor", "must be >= 0");
  check_cg(r.estimate_cg, "reconstruction.estimate_cg");
  check(r.komp.atoms_per_iteration >= 1, "reconstruction.komp.atoms_per_iteration", "must be >= 1");
  check(r.komp.max_iterations >= 1, "reconstruction.komp.max_iterations", "must be >= 1");
  check_cg(r.komp.inner, "reconstruction.komp.inner_cg");
  check(r.bregman.lambda1 > 0.0, "reconstruction.bregman.lambda1", "must be > 0");
  check(r.bregman.lambda2 >= 0.0, "reconstruction.bregman.lambda2", "must be >= 0");
  check(r.bregman.outer_iterations >= 1, "reconstruction.bregman.outer_iterations", "must be >= 1");
  check(r.bregman.inner_sweeps >= 1, "reconstruction.bregman.inner_sweeps", "must be >= 1");
  check_cg(r.bregman.inner, "reconstruction.bregman.inner_cg");

  check(separability.dip_depth >= 0.0, "separability.dip_depth", "must be >= 0");
  check(separability.min_peak_ratio >= 0.0 && separability.min_peak_ratio <= 1.0, "separability.min_peak_ratio",
        "must lie in [0, 1]");
  check(separability.upsampling >= 1, "separability.upsampling", "must be >= 1");

  for (std::size_t i = 0; i < sweep.komp_atoms.size(); ++i) {
    check(sweep.komp_atoms[i] >= 1, fmt::format("sweep.komp_atoms[{}]", i), "must be >= 1");
  }
  for (std::size_t i = 0; i < sweep.bregman_lambda1.size(); ++i) {
    check(sweep.bregman_lambda1[i] > 0.0, fmt::format("sweep.bregman_lambda1[{}]", i), "must be > 0");
  }
  for (std::size_t i = 0; i < sweep.bregman_lambda2.size(); ++i) {
    check(sweep.bregman_lambda2[i] >= 0.0, fmt::format("sweep.bregman_lambda2[{}]", i), "must be >= 0");
  }
  for (std::size_t i = 0; i < report.solvers.size(); ++i) {
    try {
      parse_solver(report.solvers[i]);
    } catch (ValidationError const &e) {
      throw ValidationError(fmt::format("report.solvers[{}]: {}", i, e.what()));
    }
  }
  for (std::size_t i = 0; i < report.sigmas.size(); ++i) {
    check(report.sigmas[i] > 0.0, fmt::format("report.sigmas[{}]", i), "must be > 0");
  }
  for (std::size_t i = 0; i < report.velocities.size(); ++i) {
    check(report.velocities[i] >= 0.0, fmt::format("report.velocities[{}]", i), "must be >= 0");
  }
}

GaussianPhantomSpec ExperimentConfig::gaussian_spec() const
{
  GaussianPhantomSpec s;
  s.sigma = gaussians.sigma;
  s.velocity = gaussians.velocity;
  s.t_min = gaussians.t_min;
  s.t_max = gaussians.t_min + trajectory.total - 1;
  s.n = trajectory.image_size;
  return s;
}

SheppLoganSpec ExperimentConfig::shepp_logan_spec() const
{
  SheppLoganSpec s;
  s.slice_thickness = shepp_logan.slice_thickness;
  s.speed = shepp_logan.speed;
  s.frames = trajectory.total;
  s.center_frame = shepp_logan.center_frame;
  s.n = trajectory.image_size;
  s.fov = shepp_logan.fov;
  return s;
}

std::vector<int> ExperimentConfig::frame_list() const
{
  if (!frames.empty()) { return frames; }
  std::vector<int> all(static_cast<std::size_t>(trajectory.total));
  for (int m = 1; m <= trajectory.total; ++m) { all[static_cast<std::size_t>(m - 1)] = m; }
  return all;
}

std::vector<int> parse_frame_list(std::string const &text)
{
  std::vector<int> out;
  auto const number = [&](std::string_view s) {
    int v = 0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw ValidationError(fmt::format("frames: '{}' is not a frame number", s));
    }
    return v;
  };
  std::string_view rest = text;
  while (!rest.empty()) {
    auto const comma = rest.find(',');
    auto const item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    auto const dash = item.find('-', 1);
    if (dash == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      int const a = number(item.substr(0, dash));
      int const b = number(item.substr(dash + 1));
      if (b < a) { throw ValidationError(fmt::format("frames: empty range '{}'", item)); }
      for (int m = a; m <= b; ++m) { out.push_back(m); }
    }
  }
  if (out.empty()) { throw ValidationError("frames: empty list"); }
  return out;
}

ExperimentConfig parse_config(std::string const &text)
{
  json doc = parse_json(text, "config");
  if (doc.is_object() && doc.contains("manifest")) {
    if (!doc.contains("config")) { throw ValidationError("manifest has no config member"); }
    doc = doc.at("config");
  }
  ExperimentConfig cfg;
  Reader root(doc, "");

  std::string kind = to_string(cfg.kind);
  root.get("experiment", kind);
  cfg.kind = parse_kind(kind, "experiment");
  root.get("seed", cfg.seed);

  if (auto s = root.section("trajectory")) {
    s->get("image_size", cfg.trajectory.image_size);
    s->get("samples", cfg.trajectory.samples);
    s->get("total", cfg.trajectory.total);
    s->get("k_max", cfg.trajectory.k_max);
    s->finish();
  }
  if (auto s = root.section("gaussians")) {
    s->get("sigma", cfg.gaussians.sigma);
    s->get("velocity", cfg.gaussians.velocity);
    s->get("t_min", cfg.gaussians.t_min);
    s->finish();
  }
  if (auto s = root.section("shepp_logan")) {
    s->get("speed", cfg.shepp_logan.speed);
    s->get("slice_thickness", cfg.shepp_logan.slice_thickness);
    s->get("center_frame", cfg.shepp_logan.center_frame);
    s->get("fov", cfg.shepp_logan.fov);
    s->finish();
  }
  if (auto s = root.section("external")) {
    s->get("kspace", cfg.external.kspace);
    s->get("trajectories", cfg.external.trajectories);
    s->get("noise_sigma", cfg.external.noise_sigma);
    s->finish();
  }
  if (auto s = root.section("noise")) {
    s->get("relative_sigma", cfg.noise);
    s->finish();
  }
  if (auto s = root.section("reconstruction")) {
    auto &r = cfg.reconstruction;
    s->get("estimate_spokes", r.estimate_spokes);
    s->get("residual_width", r.residual_width);
    std::string solver = to_string(r.solver);
    s->get("solver", solver);
    try {
      r.solver = parse_solver(solver);
    } catch (ValidationError const &e) {
      throw ValidationError(fmt::format("reconstruction.solver: {}", e.what()));
    }
    std::string mode = to_string(r.estimate_mode);
    s->get("estimate_mode", mode);
    r.estimate_mode = parse_mode(mode, "reconstruction.estimate_mode");
    s->get("warm_start", r.warm_start);
    s->get("epsilon", r.epsilon);
    s->get("epsilon_factor", r.epsilon_factor);
    std::size_t cache_mb = r.cache_bytes >> 20;
    s->get("cache_mb", cache_mb);
    r.cache_bytes = cache_mb << 20;
    if (auto c = s->section("estimate_cg")) { read_cg(*c, r.estimate_cg); }
    if (auto k = s->section("komp")) {
      k->get("atoms_per_iteration", r.komp.atoms_per_iteration);
      k->get("max_iterations", r.komp.max_iterations);
      if (auto c = k->section("inner_cg")) { read_cg(*c, r.komp.inner); }
      k->finish();
    }
    if (auto b = s->section("bregman")) {
      b->get("lambda1", r.bregman.lambda1);
      b->get("lambda2", r.bregman.lambda2);
      b->get("outer_iterations", r.bregman.outer_iterations);
      b->get("inner_sweeps", r.bregman.inner_sweeps);
      if (auto c = b->section("inner_cg")) { read_cg(*c, r.bregman.inner); }
      b->finish();
    }
    s->finish();
  }
  if (auto const *frames = root.raw("frames"); frames && frames->is_string()) {
    cfg.frames = parse_frame_list(frames->get<std::string>());
  } else {
    root.get("frames", cfg.frames);
  }
  if (auto s = root.section("separability")) {
    s->get("dip_depth", cfg.separability.dip_depth);
    s->get("min_peak_ratio", cfg.separability.min_peak_ratio);
    s->get("upsampling", cfg.separability.upsampling);
    s->finish();
  }
  if (auto s = root.section("sweep")) {
    s->get("komp_atoms", cfg.sweep.komp_atoms);
    s->get("bregman_lambda1", cfg.sweep.bregman_lambda1);
    s->get("bregman_lambda2", cfg.sweep.bregman_lambda2);
    s->finish();
  }
  if (auto s = root.section("report")) {
    s->get("speeds", cfg.report.speeds);
    s->get("sigmas", cfg.report.sigmas);
    s->get("velocities", cfg.report.velocities);
    s->get("solvers", cfg.report.solvers);
    s->get("tune", cfg.report.tune);
    s->finish();
  }
  if (auto s = root.section("output")) {
    s->get("previews", cfg.previews);
    s->finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(fs::path const &path)
{
  if (!fs::exists(path)) { throw IoError(fmt::format("config '{}' not found", path.string())); }
  return parse_config(io::read_text(path));
}

namespace {

json config_json(ExperimentConfig const &cfg)
{
  auto const &r = cfg.reconstruction;
  json epsilon = r.epsilon ? json(*r.epsilon) : json(nullptr);
  return {
    {"experiment", to_string(cfg.kind)},
    {"seed", cfg.seed},
    {"trajectory",
     {{"image_size", cfg.trajectory.image_size},
      {"samples", cfg.trajectory.samples},
      {"total", cfg.trajectory.total},
      {"k_max", cfg.trajectory.k_max}}},
    {"gaussians", {{"sigma", cfg.gaussians.sigma}, {"velocity", cfg.gaussians.velocity}, {"t_min", cfg.gaussians.t_min}}},
    {"shepp_logan",
     {{"speed", cfg.shepp_logan.speed},
      {"slice_thickness", cfg.shepp_logan.slice_thickness},
      {"center_frame", cfg.shepp_logan.center_frame},
      {"fov", cfg.shepp_logan.fov}}},
    {"external",
     {{"kspace", cfg.external.kspace},
      {"trajectories", cfg.external.trajectories},
      {"noise_sigma", cfg.external.noise_sigma}}},
    {"noise", {{"relative_sigma", cfg.noise}}},
    {"reconstruction",
     {{"estimate_spokes", r.estimate_spokes},
      {"residual_width", r.residual_width},
      {"solver", to_string(r.solver)},
      {"estimate_mode", to_string(r.estimate_mode)},
      {"warm_start", r.warm_start},
      {"epsilon", epsilon},
      {"epsilon_factor", r.epsilon_factor},
      {"cache_mb", r.cache_bytes >> 20},
      {"estimate_cg", cg_json(r.estimate_cg)},
      {"komp",
       {{"atoms_per_iteration", r.komp.atoms_per_iteration},
        {"max_iterations", r.komp.max_iterations},
        {"inner_cg", cg_json(r.komp.inner)}}},
      {"bregman",
       {{"lambda1", r.bregman.lambda1},
        {"lambda2", r.bregman.lambda2},
        {"outer_iterations", r.bregman.outer_iterations},
        {"inner_sweeps", r.bregman.inner_sweeps},
        {"inner_cg", cg_json(r.bregman.inner)}}}}},
    {"frames", cfg.frames},
    {"separability",
     {{"dip_depth", cfg.separability.dip_depth},
      {"min_peak_ratio", cfg.separability.min_peak_ratio},
      {"upsampling", cfg.separability.upsampling}}},
    {"sweep",
     {{"komp_atoms", cfg.sweep.komp_atoms},
      {"bregman_lambda1", cfg.sweep.bregman_lambda1},
      {"bregman_lambda2", cfg.sweep.bregman_lambda2}}},
    {"report",
     {{"speeds", cfg.report.speeds},
      {"sigmas", cfg.report.sigmas},
      {"velocities", cfg.report.velocities},
      {"solvers", cfg.report.solvers},
      {"tune", cfg.report.tune}}},
    {"output", {{"previews", cfg.previews}}},
  };
}

std::string hash_hex(ExperimentConfig const &cfg) { return fmt::format("{:016x}", config_hash(cfg)); }

} // namespace

std::string dump_config(ExperimentConfig const &cfg) { return config_json(cfg).dump(2) + "\n"; }

std::uint64_t config_hash(ExperimentConfig const &cfg) { return io::fnv1a(config_json(cfg).dump()); }

// ---------------------------------------------------------------------------

Dataset simulate_dataset(ExperimentConfig const &cfg)
{
  cfg.validate();
  if (cfg.kind == ExperimentKind::External) {
    throw ValidationError("experiment: external-kspace data cannot be simulated");
  }
  Dataset d;
  d.n = cfg.trajectory.image_size;
  d.trajectories = golden_angle_trajectories(1, cfg.trajectory.total, cfg.trajectory.samples, cfg.trajectory.k_max);
  KSpaceData clean;
  clean.samples.reserve(d.trajectories.size());
  if (cfg.kind == ExperimentKind::Gaussians) {
    auto const spec = cfg.gaussian_spec();
    spec.validate();
    for (auto const &t : d.trajectories) {
      clean.samples.push_back(gaussian_kspace(spec, spec.t_min + t.index - 1, t.samples));
    }
  } else {
    auto const spec = cfg.shepp_logan_spec();
    spec.validate();
    for (auto const &t : d.trajectories) {
      clean.samples.push_back(shepp_logan_slice_kspace(spec, slice_position(t.index, spec), t.samples));
    }
  }
  NoiseSpec const noise{cfg.noise, cfg.seed};
  d.noise_sigma = noise_sigma(clean, noise);
  d.data = add_noise(std::move(clean), noise);
  return d;
}

TruthFrame truth_frame(ExperimentConfig const &cfg, int frame)
{
  if (frame < 1 || frame > cfg.trajectory.total) {
    throw ValidationError(fmt::format("truth: frame {} outside [1, {}]", frame, cfg.trajectory.total));
  }
  TruthFrame t;
  t.frame = frame;
  t.n = cfg.trajectory.image_size;
  switch (cfg.kind) {
  case ExperimentKind::Gaussians: {
    auto const spec = cfg.gaussian_spec();
    t.image = gaussian_frame(spec, spec.t_min + frame - 1).magnitude();
    t.mask.assign(t.image.size(), 1);
    break;
  }
  case ExperimentKind::SheppLogan: {
    auto const spec = cfg.shepp_logan_spec();
    double const z = slice_position(frame, spec);
    t.image = shepp_logan_slice(spec, z).magnitude();
    t.mask = shepp_logan_mask(spec, z);
    break;
  }
  case ExperimentKind::External: throw ValidationError("truth: external-kspace data has no ground truth");
  }
  return t;
}

void write_dataset(fs::path const &dir, ExperimentConfig const &cfg, Dataset const &data)
{
  std::vector<fs::path> written;
  auto const track = [&](fs::path p) {
    written.push_back(p);
    return p;
  };
  std::error_code ec;
  fs::create_directories(dir / "truth", ec);
  if (ec) { throw IoError(fmt::format("cannot create '{}': {}", (dir / "truth").string(), ec.message())); }
  try {
    io::write_kspace(track(dir / "kspace.bin"), data.data);
    {
      std::ostringstream os;
      write_trajectory_csv(os, data.trajectories);
      io::write_text(track(dir / "trajectories.csv"), os.str());
    }
    std::vector<int> truth_frames;
    if (cfg.kind != ExperimentKind::External) {
      for (int m : cfg.frame_list()) {
        auto const t = truth_frame(cfg, m);
        auto const base = dir / "truth" / frame_name(m);
        io::write_f32(track(base.string() + ".f32"), t.image);
        io::write_mask_pgm(track(base.string() + "_mask.pgm"), t.mask, t.n, t.n);
        if (cfg.previews) { io::write_pgm(track(base.string() + ".pgm"), t.image, t.n, t.n); }
        truth_frames.push_back(m);
      }
    }
    json manifest = {
      {"manifest", "dataset"},
      {"config_hash", hash_hex(cfg)},
      {"seed", cfg.seed},
      {"image_size", data.n},
      {"trajectories", data.total()},
      {"samples", data.data.samples.empty() ? 0 : data.data.samples.front().size()},
      {"noise_sigma", data.noise_sigma},
      {"files", {{"kspace", "kspace.bin"}, {"trajectories", "trajectories.csv"}, {"truth", "truth"}}},
      {"truth_frames", truth_frames},
    };
    if (cfg.kind == ExperimentKind::Gaussians) {
      manifest["time_convention"] = fmt::format("frame m images t = m - 1 + ({})", cfg.gaussians.t_min);
    }
    if (cfg.kind == ExperimentKind::SheppLogan) {
      manifest["time_convention"] =
        fmt::format("frame m images z = slice_thickness * speed * (m - {})", cfg.shepp_logan.center_frame);
    }
    manifest["config"] = config_json(cfg);
    io::write_text(track(dir / "manifest.json"), manifest.dump(2) + "\n");
  } catch (...) {
    for (auto const &p : written) { fs::remove(p, ec); }
    fs::remove(dir / "truth", ec);
    throw;
  }
}

namespace {

Dataset assemble(int n, KSpaceData data, std::vector<Trajectory> trajs, double noise_sigma, std::string const &where)
{
  if (data.trajectories() != trajs.size()) {
    throw IoError(fmt::format("{}: {} k-space trajectories but {} in the trajectory file", where, data.trajectories(),
                              trajs.size()));
  }
  Dataset d;
  d.n = n;
  d.trajectories = std::move(trajs);
  d.data = std::move(data);
  d.noise_sigma = noise_sigma;
  try {
    d.validate();
  } catch (ValidationError const &e) {
    throw IoError(fmt::format("{}: {}", where, e.what()));
  }
  return d;
}

std::vector<Trajectory> read_trajectories(fs::path const &path)
{
  std::ifstream is(path);
  if (!is) { throw IoError(fmt::format("cannot open '{}'", path.string())); }
  return read_trajectory_csv(is);
}

} // namespace

Dataset load_dataset(fs::path const &dir)
{
  auto const manifest = load_manifest(dir / "manifest.json");
  if (!manifest.contains("image_size") || !manifest.contains("noise_sigma")) {
    throw IoError(fmt::format("'{}': manifest lacks image_size or noise_sigma", (dir / "manifest.json").string()));
  }
  auto data = io::read_kspace(dir / "kspace.bin");
  auto trajs = read_trajectories(dir / "trajectories.csv");
  return assemble(manifest["image_size"].get<int>(), std::move(data), std::move(trajs),
                  manifest["noise_sigma"].get<double>(), dir.string());
}

Dataset load_external(ExperimentConfig const &cfg)
{
  auto data = io::read_kspace(cfg.external.kspace);
  auto trajs = read_trajectories(cfg.external.trajectories);
  return assemble(cfg.trajectory.image_size, std::move(data), std::move(trajs), cfg.external.noise_sigma,
                  cfg.external.kspace);
}

// ---------------------------------------------------------------------------

std::vector<FrameOutcome> write_reconstruction(fs::path const &dir, ExperimentConfig const &cfg,
                                               std::shared_ptr<Dataset const> data, std::vector<int> const &frames,
                                               int workers)
{
  Reconstructor const rec(data, cfg.reconstruction);
  auto outcomes = rec.reconstruct_sequence(frames, workers);

  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) { throw IoError(fmt::format("cannot create '{}': {}", (dir / "frames").string(), ec.message())); }

  int const n = data->n;
  json entries = json::array();
  for (auto const &o : outcomes) {
    json e = {{"frame", o.frame}};
    if (!o.result) {
      e["status"] = "failed";
      e["error"] = o.error;
      entries.push_back(e);
      continue;
    }
    auto const &r = *o.result;
    auto const &d = r.diagnostics;
    auto const base = (dir / "frames" / frame_name(o.frame)).string();
    io::write_cf32(base + "_estimate.cf32", r.estimate);
    io::write_cf32(base + "_residual.cf32", r.residual);
    io::write_cf32(base + "_recon.cf32", r.recon);
    io::write_f32(base + "_estimate.f32", r.estimate.magnitude());
    io::write_f32(base + "_recon.f32", r.recon.magnitude());
    if (cfg.previews) { io::write_pgm(base + "_recon.pgm", r.recon.magnitude(), n, n); }
    io::write_text(base + "_cg.csv", convergence_csv(d.estimate));
    e["status"] = "ok";
    e["estimate_window"] = {d.estimate_first, d.estimate_last};
    e["estimate_clamped"] = d.estimate_clamped;
    e["residual_window"] = {d.residual_first, d.residual_last};
    e["residual_clamped"] = d.residual_clamped;
    e["warm_started"] = d.warm_started;
    e["cg_iterations"] = d.estimate.iterations;
    e["cg_residual"] = d.estimate.residual;
    e["cg_converged"] = d.estimate.converged;
    if (d.solver) {
      io::write_text(base + "_solver.csv", diagnostics_csv(*d.solver, cfg.reconstruction.solver == SolverKind::Komp));
      e["epsilon"] = d.epsilon;
      e["residual_energy"] = d.residual_energy;
      e["solver_iterations"] = d.solver->iterations;
      e["solver_residual_norm"] = d.solver->steps.empty() ? std::sqrt(d.residual_energy) : d.solver->steps.back().residual_norm;
      e["reached_epsilon"] = d.solver->reached_epsilon;
      e["empty_selection"] = d.solver->empty_selection;
      e["support_size"] = d.solver->support.size();
    }
    entries.push_back(e);
  }
  json manifest = {
    {"manifest", "reconstruction"},
    {"config_hash", hash_hex(cfg)},
    {"image_size", n},
    {"trajectories", data->total()},
    {"noise_sigma", data->noise_sigma},
    {"frames", entries},
    {"config", config_json(cfg)},
  };
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return outcomes;
}

void write_metrics(fs::path const &recon_dir, fs::path const &truth_dir, fs::path const &out)
{
  auto const recon_manifest = load_manifest(recon_dir / "manifest.json");
  auto const truth_manifest = load_manifest(truth_dir / "manifest.json");
  if (!truth_manifest.contains("config") || !truth_manifest.contains("truth_frames")) {
    throw IoError(fmt::format("'{}' is not a dataset manifest", (truth_dir / "manifest.json").string()));
  }
  auto const cfg = parse_config(truth_manifest["config"].dump());
  std::set<int> truth_frames;
  for (auto const &f : truth_manifest["truth_frames"]) { truth_frames.insert(f.get<int>()); }

  std::vector<int> frames;
  for (auto const &e : recon_manifest.at("frames")) {
    if (e.at("status") != "ok") { continue; }
    int const m = e.at("frame").get<int>();
    if (!truth_frames.contains(m)) {
      throw ValidationError(fmt::format("frame-set mismatch: frame {} has no ground truth in '{}'", m, truth_dir.string()));
    }
    frames.push_back(m);
  }
  if (frames.empty()) { throw ValidationError("metrics: no reconstructed frames"); }
  std::sort(frames.begin(), frames.end());

  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) { throw IoError(fmt::format("cannot create '{}': {}", out.string(), ec.message())); }

  int const n = cfg.trajectory.image_size;
  auto const row = [n](std::vector<double> const &img) {
    return std::vector<double>(img.begin() + static_cast<std::ptrdiff_t>(n / 2) * n,
                               img.begin() + static_cast<std::ptrdiff_t>(n / 2 + 1) * n);
  };
  auto const read_image = [n](fs::path const &p) {
    auto v = io::read_f32(p);
    if (v.size() != static_cast<std::size_t>(n) * n) {
      throw IoError(fmt::format("'{}': expected {} values, found {}", p.string(), n * n, v.size()));
    }
    return v;
  };

  std::string rmse_rows = "frame,estimate_rmse,recon_rmse\n";
  std::string fwhm_rows = "frame,t,truth_fwhm,estimate_fwhm,recon_fwhm,theoretical_fwhm\n";
  std::vector<ProfileFrame> truth_p, est_p, rec_p;
  for (int m : frames) {
    auto const tb = (truth_dir / "truth" / frame_name(m)).string();
    auto const rb = (recon_dir / "frames" / frame_name(m)).string();
    auto const truth = read_image(tb + ".f32");
    auto const mask = io::read_mask_pgm(tb + "_mask.pgm");
    auto const est = read_image(rb + "_estimate.f32");
    auto const rec = read_image(rb + "_recon.f32");
    if (mask.size() != truth.size()) { throw IoError(fmt::format("'{}_mask.pgm': size mismatch", tb)); }
    rmse_rows += fmt::format("{},{},{}\n", m, csv_number(rmse(est, truth, mask)), csv_number(rmse(rec, truth, mask)));
    if (cfg.kind == ExperimentKind::Gaussians) {
      int const t = cfg.gaussians.t_min + m - 1;
      truth_p.push_back({t, row(truth)});
      est_p.push_back({t, row(est)});
      rec_p.push_back({t, row(rec)});
      fwhm_rows += fmt::format("{},{},{},{},{},{}\n", m, t, csv_number(fwhm_or_nan(truth_p.back().profile)),
                               csv_number(fwhm_or_nan(est_p.back().profile)),
                               csv_number(fwhm_or_nan(rec_p.back().profile)),
                               csv_number(2.0 * std::sqrt(2.0 * std::log(2.0)) * cfg.gaussians.sigma));
    }
  }
  io::write_text(out / "rmse.csv", rmse_rows);
  if (cfg.kind == ExperimentKind::Gaussians) {
    io::write_text(out / "fwhm.csv", fwhm_rows);
    auto const spec = cfg.gaussian_spec();
    std::string times = "method,t0,t1,t2,t3,theoretical_t0,theoretical_t2\n";
    auto const add = [&](char const *name, std::vector<ProfileFrame> const &p) {
      auto const [t0, t1] = midpoint_half_max_times(p, cfg.separability.upsampling);
      auto const [t2, t3] = separability_times(p, cfg.separability);
      times += fmt::format("{},{},{},{},{},{},{}\n", name, t0.to_string(), t1.to_string(), t2.to_string(),
                           t3.to_string(), csv_number(theoretical_t0(spec)), csv_number(theoretical_t2(spec)));
    };
    add("truth", truth_p);
    add("estimate", est_p);
    add("recon", rec_p);
    io::write_text(out / "times.csv", times);
  }
}

// ---------------------------------------------------------------------------

std::vector<FrameScore> score_frames(ExperimentConfig const &cfg, std::shared_ptr<Dataset const> data,
                                     SwcsConfig const &recon, std::vector<int> const &frames, int workers)
{
  Reconstructor const rec(data, recon);
  auto const outcomes = rec.reconstruct_sequence(frames, workers);
  std::vector<FrameScore> scores;
  for (auto const &o : outcomes) {
    if (!o.result) { throw std::runtime_error(fmt::format("frame {}: {}", o.frame, o.error)); }
    auto const truth = truth_frame(cfg, o.frame);
    scores.push_back({o.frame, magnitude_rmse(o.result->estimate, truth), magnitude_rmse(o.result->recon, truth)});
  }
  return scores;
}

namespace {

struct PreparedFrame
{
  FrameResult base;
  ResidualProblem problem;
  TruthFrame truth;
};

std::vector<PreparedFrame> prepare_frames(ExperimentConfig const &cfg, Reconstructor const &rec,
                                          std::vector<int> const &frames, int workers)
{
  std::vector<std::optional<PreparedFrame>> slots(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t i) {
    auto base = rec.estimate_frame(frames[i]);
    auto problem = rec.residual_problem(base);
    slots[i] = PreparedFrame{std::move(base), std::move(problem), truth_frame(cfg, frames[i])};
  });
  std::vector<PreparedFrame> out;
  for (auto &s : slots) { out.push_back(std::move(*s)); }
  return out;
}

std::vector<SweepPoint> grid_points(ExperimentConfig const &cfg, SolverKind solver)
{
  std::vector<SweepPoint> points;
  if (solver == SolverKind::Komp) {
    for (int k : cfg.sweep.komp_atoms) { points.push_back({solver, k, 0.0, 0.0, {}, 0.0}); }
  } else if (solver == SolverKind::Bregman) {
    for (double l1 : cfg.sweep.bregman_lambda1) {
      for (double l2 : cfg.sweep.bregman_lambda2) { points.push_back({solver, 0, l1, l2, {}, 0.0}); }
    }
  } else {
    points.push_back({solver, 0, 0.0, 0.0, {}, 0.0});
  }
  if (points.empty()) { throw ValidationError(fmt::format("sweep: empty grid for solver {}", to_string(solver))); }
  return points;
}

void score_points(std::vector<SweepPoint> &points, ExperimentConfig const &cfg, Reconstructor const &rec,
                  std::vector<PreparedFrame> &prepared, int workers)
{
  for (auto &pt : points) {
    auto komp = cfg.reconstruction.komp;
    auto bregman = cfg.reconstruction.bregman;
    if (pt.solver == SolverKind::Komp) { komp.atoms_per_iteration = pt.atoms; }
    if (pt.solver == SolverKind::Bregman) {
      bregman.lambda1 = pt.lambda1;
      bregman.lambda2 = pt.lambda2;
    }
    pt.scores.assign(prepared.size(), {});
    parallel_for(prepared.size(), workers, [&](std::size_t i) {
      auto res = prepared[i].base;
      rec.solve_frame(res, prepared[i].problem, pt.solver, komp, bregman);
      pt.scores[i] = {res.frame, magnitude_rmse(res.estimate, prepared[i].truth), magnitude_rmse(res.recon, prepared[i].truth)};
    });
    double sum = 0.0;
    for (auto const &s : pt.scores) { sum += s.recon_rmse; }
    pt.mean_rmse = sum / static_cast<double>(pt.scores.size());
  }
}

std::string point_setting(SweepPoint const &p)
{
  switch (p.solver) {
  case SolverKind::Komp: return fmt::format("K={}", p.atoms);
  case SolverKind::Bregman: return fmt::format("lambda1={:g};lambda2={:g}", p.lambda1, p.lambda2);
  case SolverKind::None: return "";
  }
  return "";
}

} // namespace

std::vector<SweepPoint> run_sweep(ExperimentConfig const &cfg, std::shared_ptr<Dataset const> data, SolverKind solver,
                                  int workers)
{
  auto points = grid_points(cfg, solver);
  Reconstructor const rec(data, cfg.reconstruction);
  auto prepared = prepare_frames(cfg, rec, cfg.frame_list(), workers);
  score_points(points, cfg, rec, prepared, workers);
  return points;
}

std::size_t best_point(std::vector<SweepPoint> const &points)
{
  if (points.empty()) { throw ValidationError("sweep: empty grid"); }
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].mean_rmse < points[best].mean_rmse) { best = i; }
  }
  return best;
}

std::string sweep_csv(std::vector<SweepPoint> const &points)
{
  std::string out = "solver,atoms,lambda1,lambda2,frame,estimate_rmse,recon_rmse,mean_rmse\n";
  for (auto const &p : points) {
    for (auto const &s : p.scores) {
      out += fmt::format("{},{},{:g},{:g},{},{},{},{}\n", to_string(p.solver), p.atoms, p.lambda1, p.lambda2, s.frame,
                         csv_number(s.estimate_rmse), csv_number(s.recon_rmse), csv_number(p.mean_rmse));
    }
  }
  return out;
}

std::vector<TableCell> rmse_table(ExperimentConfig const &cfg, int workers)
{
  if (cfg.kind != ExperimentKind::SheppLogan) { throw ValidationError("report: the RMSE table needs a shepp-logan experiment"); }
  auto speeds = cfg.report.speeds;
  if (speeds.empty()) { speeds.push_back(cfg.shepp_logan.speed); }
  auto const frames = cfg.frame_list();

  std::vector<TableCell> cells;
  for (double p : speeds) {
    auto run = cfg;
    run.shepp_logan.speed = p;
    auto const data = std::make_shared<Dataset const>(simulate_dataset(run));
    Reconstructor const rec(data, run.reconstruction);
    auto prepared = prepare_frames(run, rec, frames, workers);
    for (auto const &pf : prepared) {
      cells.push_back({p, pf.base.frame, "estimate", magnitude_rmse(pf.base.estimate, pf.truth), ""});
    }
    for (auto const &name : cfg.report.solvers) {
      auto const solver = parse_solver(name);
      if (solver == SolverKind::None) { continue; }
      if (cfg.report.tune) {
        // best grid point per frame
        for (auto &pf : prepared) {
          std::vector<PreparedFrame> one{pf};
          auto points = grid_points(run, solver);
          score_points(points, run, rec, one, workers);
          auto const &b = points[best_point(points)];
          cells.push_back({p, pf.base.frame, name, b.mean_rmse, point_setting(b)});
        }
      } else {
        std::vector<SweepPoint> points{
          {solver, run.reconstruction.komp.atoms_per_iteration, run.reconstruction.bregman.lambda1,
           run.reconstruction.bregman.lambda2, {}, 0.0}};
        score_points(points, run, rec, prepared, workers);
        for (auto const &s : points.front().scores) {
          cells.push_back({p, s.frame, name, s.recon_rmse, point_setting(points.front())});
        }
      }
    }
  }
  return cells;
}

std::string rmse_table_csv(std::vector<TableCell> const &cells)
{
  std::vector<std::pair<double, int>> columns;
  std::vector<std::string> methods;
  for (auto const &c : cells) {
    if (std::find(columns.begin(), columns.end(), std::pair{c.speed, c.frame}) == columns.end()) {
      columns.emplace_back(c.speed, c.frame);
    }
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) { methods.push_back(c.method); }
  }
  std::string out = "method";
  for (auto const &[p, f] : columns) { out += fmt::format(",p={:g} frame={}", p, f); }
  out += "\n";
  for (auto const &m : methods) {
    out += m;
    for (auto const &col : columns) {
      auto it = std::find_if(cells.begin(), cells.end(), [&](auto const &c) {
        return c.method == m && c.speed == col.first && c.frame == col.second;
      });
      out += it == cells.end() ? "," : "," + csv_number(it->rmse);
    }
    out += "\n";
  }
  return out;
}

std::vector<ResolutionResult> resolution_study(ExperimentConfig const &cfg, int workers)
{
  if (cfg.kind != ExperimentKind::Gaussians) { throw ValidationError("report: the resolution study needs a gaussians experiment"); }
  auto velocities = cfg.report.velocities;
  auto sigmas = cfg.report.sigmas;
  if (velocities.empty()) { velocities.push_back(cfg.gaussians.velocity); }
  if (sigmas.empty()) { sigmas.push_back(cfg.gaussians.sigma); }
  auto const frames = cfg.frame_list();

  std::vector<ResolutionResult> rows;
  for (double v : velocities) {
    for (double s : sigmas) {
      auto run = cfg;
      run.gaussians.velocity = v;
      run.gaussians.sigma = s;
      auto const spec = run.gaussian_spec();
      auto const data = std::make_shared<Dataset const>(simulate_dataset(run));
      Reconstructor const rec(data, run.reconstruction);
      auto const outcomes = rec.reconstruct_sequence(frames, workers);

      std::vector<ProfileFrame> truth_p, est_p, rec_p;
      for (auto const &o : outcomes) {
        if (!o.result) { throw std::runtime_error(fmt::format("frame {}: {}", o.frame, o.error)); }
        int const t = spec.t_min + o.frame - 1;
        truth_p.push_back({t, center_profile(gaussian_frame(spec, t))});
        est_p.push_back({t, center_profile(o.result->estimate)});
        rec_p.push_back({t, center_profile(o.result->recon)});
      }
      auto const first = [](std::vector<ProfileFrame> const &p) {
        auto it = std::min_element(p.begin(), p.end(), [](auto const &a, auto const &b) { return a.t < b.t; });
        return fwhm_or_nan(it->profile);
      };
      auto const add = [&](char const *name, std::vector<ProfileFrame> const &p) {
        ResolutionResult r;
        r.velocity = v;
        r.sigma = s;
        r.method = name;
        std::tie(r.t0, r.t1) = midpoint_half_max_times(p, run.separability.upsampling);
        std::tie(r.t2, r.t3) = separability_times(p, run.separability);
        r.fwhm = first(p);
        r.theoretical_t0 = theoretical_t0(spec);
        r.theoretical_t2 = theoretical_t2(spec);
        rows.push_back(r);
      };
      add("truth", truth_p);
      add("estimate", est_p);
      add("swcs", rec_p);
    }
  }
  return rows;
}

std::string resolution_csv(std::vector<ResolutionResult> const &rows)
{
  std::string out = "velocity,sigma,method,metric,value,theoretical\n";
  for (auto const &r : rows) {
    auto const line = [&](char const *metric, std::string const &value, double theory) {
      out += fmt::format("{:g},{:g},{},{},{},{}\n", r.velocity, r.sigma, r.method, metric, value, csv_number(theory));
    };
    line("t0", r.t0.to_string(), r.theoretical_t0);
    line("t1", r.t1.to_string(), -r.theoretical_t0);
    line("t2", r.t2.to_string(), r.theoretical_t2);
    line("t3", r.t3.to_string(), -r.theoretical_t2);
    line("fwhm", csv_number(r.fwhm), 2.0 * std::sqrt(2.0 * std::log(2.0)) * r.sigma);
  }
  return out;
}

} // namespace swcs
