#include "swcs/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace swcs::io {

namespace {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

std::ofstream open_out(fs::path const &path)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) { throw IoError(fmt::format("cannot open '{}' for writing", path.string())); }
  return os;
}

std::ifstream open_in(fs::path const &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) { throw IoError(fmt::format("cannot open '{}'", path.string())); }
  return is;
}

void check_written(std::ofstream &os, fs::path const &path)
{
  os.flush();
  if (!os) { throw IoError(fmt::format("write failed for '{}'", path.string())); }
}

std::vector<char> slurp(fs::path const &path)
{
  auto is = open_in(path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

void write_kspace(fs::path const &path, KSpaceData const &data)
{
  if (data.samples.empty()) { throw ValidationError("write_kspace: no trajectories"); }
  std::size_t const k = data.samples.front().size();
  for (auto const &t : data.samples) {
    if (t.size() != k) { throw ValidationError("write_kspace: trajectories must all have the same sample count"); }
  }
  auto os = open_out(path);
  os.write(kspace_magic, 8);
  std::int32_t const dims[2] = {static_cast<std::int32_t>(data.samples.size()), static_cast<std::int32_t>(k)};
  os.write(reinterpret_cast<char const *>(dims), sizeof dims);
  for (auto const &t : data.samples) {
    os.write(reinterpret_cast<char const *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(Cx)));
  }
  check_written(os, path);
}

KSpaceData read_kspace(fs::path const &path)
{
  auto const bytes = slurp(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kspace_magic, 8) != 0) {
    throw IoError(fmt::format("'{}' is not a k-space file (bad magic)", path.string()));
  }
  std::int32_t dims[2];
  std::memcpy(dims, bytes.data() + 8, sizeof dims);
  if (dims[0] < 1 || dims[1] < 1) {
    throw IoError(fmt::format("'{}': invalid header M = {}, K = {}", path.string(), dims[0], dims[1]));
  }
  std::size_t const m = static_cast<std::size_t>(dims[0]);
  std::size_t const k = static_cast<std::size_t>(dims[1]);
  if (bytes.size() != 16 + m * k * sizeof(Cx)) {
    throw IoError(fmt::format("'{}': expected {} bytes for M = {}, K = {}, found {}", path.string(),
                              16 + m * k * sizeof(Cx), m, k, bytes.size()));
  }
  KSpaceData out;
  out.samples.assign(m, std::vector<Cx>(k));
  for (std::size_t i = 0; i < m; ++i) {
    std::memcpy(out.samples[i].data(), bytes.data() + 16 + i * k * sizeof(Cx), k * sizeof(Cx));
  }
  return out;
}

void write_f32(fs::path const &path, std::span<double const> values)
{
  std::vector<float> f(values.begin(), values.end());
  auto os = open_out(path);
  os.write(reinterpret_cast<char const *>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  check_written(os, path);
}

std::vector<double> read_f32(fs::path const &path)
{
  auto const bytes = slurp(path);
  if (bytes.size() % sizeof(float) != 0) { throw IoError(fmt::format("'{}': truncated float32 file", path.string())); }
  std::vector<float> f(bytes.size() / sizeof(float));
  std::memcpy(f.data(), bytes.data(), bytes.size());
  return {f.begin(), f.end()};
}

void write_cf32(fs::path const &path, Image const &img)
{
  std::vector<float> f;
  f.reserve(2 * img.pixels());
  for (auto v : img.values()) {
    f.push_back(static_cast<float>(v.real()));
    f.push_back(static_cast<float>(v.imag()));
  }
  auto os = open_out(path);
  os.write(reinterpret_cast<char const *>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  check_written(os, path);
}

Image read_cf32(fs::path const &path, int frame)
{
  auto const bytes = slurp(path);
  std::size_t const entries = bytes.size() / (2 * sizeof(float));
  auto const n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(entries))));
  if (bytes.size() % (2 * sizeof(float)) != 0 || static_cast<std::size_t>(n) * n != entries || n < 2) {
    throw IoError(fmt::format("'{}': not a square complex float32 image", path.string()));
  }
  std::vector<float> f(2 * entries);
  std::memcpy(f.data(), bytes.data(), bytes.size());
  std::vector<Cx> v(entries);
  for (std::size_t i = 0; i < entries; ++i) { v[i] = Cx{f[2 * i], f[2 * i + 1]}; }
  return Image(n, std::move(v), frame);
}

void write_pgm(fs::path const &path, std::span<double const> values, int width, int height)
{
  if (values.size() != static_cast<std::size_t>(width) * height) { throw ValidationError("write_pgm: size mismatch"); }
  auto const [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double const lo = values.empty() ? 0.0 : *lo_it;
  double const span = values.empty() ? 0.0 : *hi_it - lo;
  std::string px(values.size(), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    double const s = span > 0.0 ? (values[i] - lo) / span : 0.0;
    px[i] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s)));
  }
  auto os = open_out(path);
  os << fmt::format("P5\n{} {}\n255\n", width, height);
  os.write(px.data(), static_cast<std::streamsize>(px.size()));
  check_written(os, path);
}

void write_mask_pgm(fs::path const &path, std::span<std::uint8_t const> mask, int width, int height)
{
  if (mask.size() != static_cast<std::size_t>(width) * height) { throw ValidationError("write_mask_pgm: size mismatch"); }
  std::string px(mask.size(), '\0');
  for (std::size_t i = 0; i < mask.size(); ++i) { px[i] = static_cast<char>(mask[i] ? 255 : 0); }
  auto os = open_out(path);
  os << fmt::format("P5\n{} {}\n255\n", width, height);
  os.write(px.data(), static_cast<std::streamsize>(px.size()));
  check_written(os, path);
}

std::vector<std::uint8_t> read_mask_pgm(fs::path const &path)
{
  auto is = open_in(path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255) {
    throw IoError(fmt::format("'{}': unsupported PGM header", path.string()));
  }
  is.get();
  std::vector<char> px(static_cast<std::size_t>(w) * h);
  is.read(px.data(), static_cast<std::streamsize>(px.size()));
  if (is.gcount() != static_cast<std::streamsize>(px.size())) {
    throw IoError(fmt::format("'{}': truncated PGM", path.string()));
  }
  std::vector<std::uint8_t> mask(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) { mask[i] = static_cast<unsigned char>(px[i]) >= 128 ? 1 : 0; }
  return mask;
}

void write_text(fs::path const &path, std::string const &text)
{
  auto os = open_out(path);
  os << text;
  check_written(os, path);
}

std::string read_text(fs::path const &path)
{
  auto const bytes = slurp(path);
  return {bytes.begin(), bytes.end()};
}

std::uint64_t fnv1a(std::string_view bytes)
{
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace swcs::io
