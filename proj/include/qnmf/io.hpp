#pragma once

#include <openssl/evp.h>

#include <array>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qnmf/errors.hpp"
#include "qnmf/quaternion.hpp"
#include "qnmf/stokes.hpp"

// On-disk tables. Quaternion tables store Stokes order (S0, S1, S2, S3); the
// quaternion embedding is applied at load time only.

namespace qnmf::io {

namespace fs = std::filesystem;

/// 17 significant digits, enough for an exact double round trip.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("read failed: " + path.string());
  return ss.str();
}

/// Writes `content` to a temporary sibling and renames it over `path`.
inline void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

namespace detail {

/// Splits text into lines, dropping one trailing newline and any '\r'.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::size_t parse_index(std::string_view field, const std::string& path, std::size_t line, const char* name) {
  field = trim(field);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(path, line, std::string("column ") + name + ": expected a non-negative integer, got '" +
                                     std::string(field) + "'");
  }
  return value;
}

inline double parse_number(std::string_view field, const std::string& path, std::size_t line, const char* name) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(path, line, std::string("column ") + name + ": expected a number, got '" + std::string(field) +
                                     "'");
  }
  if (!std::isfinite(value)) throw ParseError(path, line, std::string("column ") + name + ": non-finite value");
  return value;
}

struct IndexedRow {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t line = 0;
  std::array<double, 4> values{};
};

/// Parses an index-index-values table and checks that the index pairs cover a
/// dense grid exactly once.
inline std::vector<IndexedRow> parse_indexed(std::string_view text, const std::string& path,
                                             const std::vector<std::string>& header, std::size_t& rows,
                                             std::size_t& cols) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(path, 1, "empty file, expected header");
  const auto head = split_fields(lines[0]);
  bool header_ok = head.size() == header.size();
  for (std::size_t i = 0; header_ok && i < head.size(); ++i) header_ok = trim(head[i]) == header[i];
  if (!header_ok) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw ParseError(path, 1, "bad header, expected '" + expected + "'");
  }
  const std::size_t values = header.size() - 2;

  std::vector<IndexedRow> out;
  rows = cols = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (trim(lines[li]).empty()) {
      if (li + 1 == lines.size()) break;
      throw ParseError(path, line_no, "blank line inside table");
    }
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError(path, line_no,
                       "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    IndexedRow r;
    r.line = line_no;
    r.row = parse_index(fields[0], path, line_no, header[0].c_str());
    r.col = parse_index(fields[1], path, line_no, header[1].c_str());
    for (std::size_t v = 0; v < values; ++v) r.values[v] = parse_number(fields[2 + v], path, line_no, header[2 + v].c_str());
    rows = std::max(rows, r.row + 1);
    cols = std::max(cols, r.col + 1);
    out.push_back(r);
  }
  if (out.empty()) throw ParseError(path, 2, "table has no data rows");
  if (rows * cols > out.size()) {
    // Cannot be dense. Blame the row with the largest index before allocating the grid.
    const auto far = std::max_element(out.begin(), out.end(), [](const IndexedRow& a, const IndexedRow& b) {
      return a.row + a.col < b.row + b.col;
    });
    if (rows * cols > 2 * out.size() + 16) {
      throw ParseError(path, far->line, "index too large for a dense table of " + std::to_string(out.size()) + " rows");
    }
  }

  std::vector<std::size_t> seen(rows * cols, 0);
  for (const auto& r : out) {
    std::size_t& slot = seen[r.row * cols + r.col];
    if (slot != 0) {
      throw ParseError(path, r.line, "duplicate entry (" + header[0] + "=" + std::to_string(r.row) + ", " + header[1] +
                                         "=" + std::to_string(r.col) + "), first seen on line " + std::to_string(slot));
    }
    slot = r.line;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] == 0) {
      throw ParseError(path, lines.size(), "missing entry (" + header[0] + "=" + std::to_string(i / cols) + ", " +
                                               header[1] + "=" + std::to_string(i % cols) + "); table must be dense");
    }
  }
  return out;
}

inline QuaternionMatrix parse_quaternion_table(std::string_view text, const std::string& path, const char* col_name) {
  std::size_t rows = 0, cols = 0;
  const auto entries = parse_indexed(text, path, {"m", col_name, "S0", "S1", "S2", "S3"}, rows, cols);
  QuaternionMatrix out(rows, cols);
  for (const auto& e : entries) {
    out(e.row, e.col) = stokes_to_quaternion({e.values[0], e.values[1], e.values[2], e.values[3]});
  }
  return out;
}

inline std::string format_quaternion_table(const QuaternionMatrix& m, const char* col_name) {
  std::string out = std::string("m,") + col_name + ",S0,S1,S2,S3\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const StokesSample s = quaternion_to_stokes(m(r, c));
      out += std::to_string(r) + ',' + std::to_string(c) + ',' + format_double(s.s0) + ',' + format_double(s.s1) +
             ',' + format_double(s.s2) + ',' + format_double(s.s3) + '\n';
    }
  }
  return out;
}

}  // namespace detail

/// Data table X (M x N): header m,n,S0,S1,S2,S3, one row per (band, pixel).
inline QuaternionMatrix parse_stokes_table(std::string_view text, const std::string& path = "<memory>") {
  return detail::parse_quaternion_table(text, path, "n");
}

inline std::string format_stokes_table(const QuaternionMatrix& X) { return detail::format_quaternion_table(X, "n"); }

/// Source table W (M x P): header m,p,S0,S1,S2,S3.
inline QuaternionMatrix parse_w_table(std::string_view text, const std::string& path = "<memory>") {
  return detail::parse_quaternion_table(text, path, "p");
}

inline std::string format_w_table(const QuaternionMatrix& W) { return detail::format_quaternion_table(W, "p"); }

/// Activation table H (P x N): header p,n,h.
inline RealMatrix parse_h_table(std::string_view text, const std::string& path = "<memory>") {
  std::size_t rows = 0, cols = 0;
  const auto entries = detail::parse_indexed(text, path, {"p", "n", "h"}, rows, cols);
  RealMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (const auto& e : entries) out(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.values[0];
  return out;
}

inline std::string format_h_table(const RealMatrix& H) {
  std::string out = "p,n,h\n";
  for (Eigen::Index p = 0; p < H.rows(); ++p) {
    for (Eigen::Index n = 0; n < H.cols(); ++n) {
      out += std::to_string(p) + ',' + std::to_string(n) + ',' + format_double(H(p, n)) + '\n';
    }
  }
  return out;
}

inline QuaternionMatrix load_stokes_table(const fs::path& path) { return parse_stokes_table(read_file(path), path.string()); }
inline QuaternionMatrix load_w_table(const fs::path& path) { return parse_w_table(read_file(path), path.string()); }
inline RealMatrix load_h_table(const fs::path& path) { return parse_h_table(read_file(path), path.string()); }

inline void save_stokes_table(const fs::path& path, const QuaternionMatrix& X) { write_atomic(path, format_stokes_table(X)); }
inline void save_w_table(const fs::path& path, const QuaternionMatrix& W) { write_atomic(path, format_w_table(W)); }
inline void save_h_table(const fs::path& path, const RealMatrix& H) { write_atomic(path, format_h_table(H)); }

}  // namespace qnmf::io
