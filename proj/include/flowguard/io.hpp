#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "flowguard/error.hpp"
#include "flowguard/flowmap.hpp"

namespace flowguard::io {

namespace detail {

template <typename T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace detail

template <typename T>
void write_le(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) v = detail::byteswap(v);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw IoError("unexpected end of binary data");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) v = detail::byteswap(v);
  return v;
}

/// Dense two-channel flow field (u, v), row-major, as stored in .flo files.
struct FlowField {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> uv;  // 2 * width * height, interleaved

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

inline constexpr float kFloMagic = 202021.25f;

/// Throws IoError on a bad magic, implausible dimensions, or truncation.
FlowField read_flo(std::istream& in);
FlowField read_flo_file(const std::filesystem::path& path);
void write_flo(std::ostream& out, const FlowField& field);
void write_flo_file(const std::filesystem::path& path, const FlowField& field);

/// height x width map of sqrt(u^2 + v^2).
FlowMap magnitude(const FlowField& field);

/// Plain-text matrix: one row per line, values separated by commas or whitespace.
/// Blank lines and lines starting with '#' are skipped.
FlowMap read_matrix_csv(std::istream& in);
FlowMap read_matrix_csv_file(const std::filesystem::path& path);

/// Dispatches on the .flo extension; anything else is read as a text matrix.
FlowMap load_flow_map(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target, so a
/// failed write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Round-trippable text for a double (%.17g).
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line, char sep = ',');

}  // namespace flowguard::io
