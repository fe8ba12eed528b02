#include "flowguard/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flowguard::io {

namespace {

// Guards against allocating from garbage headers.
constexpr std::uint64_t kMaxFloPixels = std::uint64_t{1} << 28;

}  // namespace

FlowField read_flo(std::istream& in) {
  FlowField f;
  float magic = 0.0f;
  try {
    magic = read_le<float>(in);
  } catch (const IoError&) {
    throw IoError(".flo file too short for header");
  }
  if (magic != kFloMagic) throw IoError(".flo magic mismatch");
  std::int32_t w = 0, h = 0;
  try {
    w = read_le<std::int32_t>(in);
    h = read_le<std::int32_t>(in);
  } catch (const IoError&) {
    throw IoError(".flo header truncated");
  }
  if (w <= 0 || h <= 0 || static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h) > kMaxFloPixels) {
    throw IoError(".flo has invalid dimensions");
  }
  f.width = static_cast<std::uint32_t>(w);
  f.height = static_cast<std::uint32_t>(h);
  const std::size_t n = 2 * static_cast<std::size_t>(f.width) * f.height;
  f.uv.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      f.uv[i] = read_le<float>(in);
    } catch (const IoError&) {
      throw IoError(".flo payload truncated: expected " + std::to_string(n) + " floats, got " +
                    std::to_string(i));
    }
  }
  return f;
}

FlowField read_flo_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_flo(in);
}

void write_flo(std::ostream& out, const FlowField& field) {
  if (field.uv.size() != 2 * static_cast<std::size_t>(field.width) * field.height) {
    throw DimensionError("flow field payload does not match its dimensions");
  }
  write_le(out, kFloMagic);
  write_le(out, static_cast<std::int32_t>(field.width));
  write_le(out, static_cast<std::int32_t>(field.height));
  for (float v : field.uv) write_le(out, v);
}

void write_flo_file(const std::filesystem::path& path, const FlowField& field) {
  std::ostringstream buf(std::ios::binary);
  write_flo(buf, field);
  write_file_atomic(path, buf.str());
}

FlowMap magnitude(const FlowField& field) {
  std::vector<double> mag(static_cast<std::size_t>(field.width) * field.height);
  for (std::size_t n = 0; n < mag.size(); ++n) {
    const double u = field.uv[2 * n];
    const double v = field.uv[2 * n + 1];
    mag[n] = std::sqrt(u * u + v * v);
  }
  return FlowMap(field.height, field.width, std::move(mag));
}

FlowMap read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw IoError("line " + std::to_string(lineno) + ": not a number: '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("line " + std::to_string(lineno) + ": expected " +
                    std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("matrix file has no data rows");
  return FlowMap::from_rows(rows);
}

FlowMap read_matrix_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_matrix_csv(in);
}

FlowMap load_flow_map(const std::filesystem::path& path) {
  if (path.extension() == ".flo") return magnitude(read_flo_file(path));
  return read_matrix_csv_file(path);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move output into place: " + path.string());
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line, char sep) {
  const auto trimmed = [sep](std::string s) {
    const auto blank = [sep](char c) { return c != sep && (c == ' ' || c == '\t' || c == '\r'); };
    while (!s.empty() && blank(s.back())) s.pop_back();
    std::size_t lead = 0;
    while (lead < s.size() && blank(s[lead])) ++lead;
    return s.substr(lead);
  };
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(trimmed(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trimmed(cur));
  return out;
}

}  // namespace flowguard::io
