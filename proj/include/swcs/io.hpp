#pragma once

#include "core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace swcs::io {

namespace fs = std::filesystem;

/*
 * k-space file: 16-byte header, then the samples.
 *
 *   bytes 0-7   "SWCSKSP1"
 *   bytes 8-11  M, trajectories (int32 little-endian)
 *   bytes 12-15 K, samples per trajectory (int32 little-endian)
 *   then M * K pairs (re, im) of float64 little-endian, trajectory-major
 */
inline constexpr char kspace_magic[8] = {'S', 'W', 'C', 'S', 'K', 'S', 'P', '1'};

void write_kspace(fs::path const &path, KSpaceData const &data);
KSpaceData read_kspace(fs::path const &path);

/// Raw little-endian float32, N*N values row-major.
void write_f32(fs::path const &path, std::span<double const> values);
std::vector<double> read_f32(fs::path const &path);

/// Raw little-endian float32 pairs (re, im), N*N entries row-major.
void write_cf32(fs::path const &path, Image const &img);
Image read_cf32(fs::path const &path, int frame = 0);

/// 8-bit binary PGM, min-max scaled.
void write_pgm(fs::path const &path, std::span<double const> values, int width, int height);
/// Binary PGM of a mask, 255 = foreground.
void write_mask_pgm(fs::path const &path, std::span<std::uint8_t const> mask, int width, int height);
std::vector<std::uint8_t> read_mask_pgm(fs::path const &path);

void write_text(fs::path const &path, std::string const &text);
std::string read_text(fs::path const &path);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a(std::string_view bytes);

} // namespace swcs::io
