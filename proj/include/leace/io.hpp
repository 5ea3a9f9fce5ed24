// Copyright 2026 The leace-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEACE_IO_HPP_
#define LEACE_IO_HPP_

// File formats:
//
//   EMBX     "EMBX" | u32 version (=1) | u64 rows | u64 cols |
//            rows*cols f64 values, row-major. All integers and floats are
//            little-endian; no padding.
//   CSV      one row per line, comma-separated decimal or scientific floats,
//            optional non-numeric header line.
//   labels   one UTF-8 label per line; blank lines rejected.
//   pairs    one "i,j" zero-based index pair per line.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "leace/error.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"
#include "leace/metrics.hpp"

namespace leace {

enum class MatrixFormat { kAuto, kEmbx, kCsv };

inline constexpr std::array<char, 4> kEmbxMagic = {'E', 'M', 'B', 'X'};
inline constexpr std::uint32_t kEmbxVersion = 1;
inline constexpr std::size_t kEmbxHeaderSize = 24;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  out.append(raw.data(), raw.size());
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  std::array<char, sizeof(T)> raw;
  std::memcpy(raw.data(), bytes.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(raw.begin(), raw.end());
  }
  T value;
  std::memcpy(&value, raw.data(), sizeof(T));
  return value;
}

// Shortest form that reads back to the same double, at most 17 digits.
inline std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Splits into lines, dropping one trailing newline and any '\r' before '\n'.
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
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EMBX

inline std::string encode_embx(const Matrix& m) {
  require_finite(m, "matrix");
  std::string out;
  out.reserve(kEmbxHeaderSize + static_cast<std::size_t>(m.size()) * 8);
  out.append(kEmbxMagic.data(), kEmbxMagic.size());
  detail::put_le<std::uint32_t>(out, kEmbxVersion);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) detail::put_le<double>(out, m(i, j));
  }
  return out;
}

inline Matrix decode_embx(std::string_view bytes) {
  if (bytes.size() < 4 ||
      std::memcmp(bytes.data(), kEmbxMagic.data(), kEmbxMagic.size()) != 0) {
    throw FormatError::at_byte("missing EMBX magic", 0);
  }
  if (bytes.size() < kEmbxHeaderSize) {
    throw FormatError::at_byte("truncated EMBX header", bytes.size());
  }
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kEmbxVersion) {
    throw FormatError::at_byte("unsupported EMBX version " + std::to_string(version), 4);
  }
  const auto rows = detail::get_le<std::uint64_t>(bytes, 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 16);
  const std::uint64_t payload = bytes.size() - kEmbxHeaderSize;
  if (cols != 0 && rows > payload / 8 / cols + 1) {
    throw FormatError::at_byte("EMBX payload shorter than declared " +
                                   std::to_string(rows) + "x" + std::to_string(cols),
                               bytes.size());
  }
  const std::uint64_t expected = rows * cols * 8;
  if (payload < expected) {
    throw FormatError::at_byte("EMBX payload shorter than declared " +
                                   std::to_string(rows) + "x" + std::to_string(cols),
                               bytes.size());
  }
  if (payload > expected) {
    throw FormatError::at_byte("trailing bytes after EMBX payload",
                               kEmbxHeaderSize + expected);
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t offset = kEmbxHeaderSize;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = detail::get_le<double>(bytes, offset);
      if (!std::isfinite(v)) {
        throw FormatError::at_byte("non-finite value in EMBX payload", offset);
      }
      m(i, j) = v;
      offset += 8;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string encode_csv(const Matrix& m) {
  require_finite(m, "matrix");
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += detail::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Matrix decode_csv(std::string_view text) {
  auto lines = detail::split_lines(text);
  std::size_t first = 0;
  if (!lines.empty()) {
    double probe = 0.0;
    for (auto field : detail::split_fields(lines[0])) {
      if (!detail::parse_double(field, probe)) {
        first = 1;  // header
        break;
      }
    }
  }
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t li = first; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].empty()) throw FormatError::at_line("empty CSV row", line_no);
    const auto fields = detail::split_fields(lines[li]);
    if (rows.empty()) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw FormatError::at_line("ragged CSV row: expected " + std::to_string(width) +
                                     " fields, got " + std::to_string(fields.size()),
                                 line_no);
    }
    std::vector<double> row(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (!detail::parse_double(fields[k], row[k])) {
        throw FormatError::at_line("not a number: '" + std::string(fields[k]) + "'",
                                   line_no);
      }
      if (!std::isfinite(row[k])) {
        throw FormatError::at_line("non-finite CSV value", line_no);
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Matrix files

inline MatrixFormat format_for_path(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  return ext == ".csv" ? MatrixFormat::kCsv : MatrixFormat::kEmbx;
}

inline Matrix read_embeddings(const std::string& path,
                              MatrixFormat format = MatrixFormat::kAuto) {
  const std::string bytes = read_file(path);
  if (format == MatrixFormat::kAuto) {
    format = bytes.size() >= 4 && bytes.compare(0, 4, "EMBX") == 0
                 ? MatrixFormat::kEmbx
                 : MatrixFormat::kCsv;
  }
  return format == MatrixFormat::kEmbx ? decode_embx(bytes) : decode_csv(bytes);
}

// kAuto picks CSV for a ".csv" extension and EMBX otherwise.
inline void write_embeddings(const std::string& path, const Matrix& m,
                             MatrixFormat format = MatrixFormat::kAuto) {
  if (format == MatrixFormat::kAuto) format = format_for_path(path);
  write_file(path, format == MatrixFormat::kCsv ? encode_csv(m) : encode_embx(m));
}

// ---------------------------------------------------------------------------
// Labels and pairs

inline ConceptLabels decode_labels(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ValidationError("label file is empty");
  std::vector<std::string> labels;
  labels.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) throw FormatError::at_line("blank label line", i + 1);
    labels.emplace_back(lines[i]);
  }
  return ConceptLabels::from_labels(std::move(labels));
}

inline ConceptLabels read_labels(const std::string& path) {
  return decode_labels(read_file(path));
}

inline std::string encode_labels(const ConceptLabels& c) {
  std::string out;
  for (const auto& label : c.labels()) {
    out += label;
    out += '\n';
  }
  return out;
}

inline void write_labels(const std::string& path, const ConceptLabels& c) {
  write_file(path, encode_labels(c));
}

inline std::vector<IndexPair> decode_pairs(std::string_view text) {
  const auto lines = detail::split_lines(text);
  std::vector<IndexPair> pairs;
  std::set<IndexPair> seen;
  auto parse_index = [](std::string_view s, std::size_t& out) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto fields = detail::split_fields(lines[li]);
    std::size_t a = 0;
    std::size_t b = 0;
    if (fields.size() != 2 || !parse_index(fields[0], a) ||
        !parse_index(fields[1], b)) {
      throw FormatError::at_line("expected 'i,j'", line_no);
    }
    if (a == b) throw FormatError::at_line("self-pair", line_no);
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw FormatError::at_line("duplicate pair", line_no);
    }
    pairs.emplace_back(a, b);
  }
  return pairs;
}

inline std::vector<IndexPair> read_pairs(const std::string& path) {
  return decode_pairs(read_file(path));
}

inline std::string encode_pairs(const std::vector<IndexPair>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    out += std::to_string(a) + "," + std::to_string(b) + "\n";
  }
  return out;
}

inline void write_pairs(const std::string& path, const std::vector<IndexPair>& pairs) {
  write_file(path, encode_pairs(pairs));
}

// ---------------------------------------------------------------------------
// Digests

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[i]);
  }
  return hex.str();
}

inline std::string sha256_file(const std::string& path) {
  return sha256_hex(read_file(path));
}

}  // namespace leace

#endif  // LEACE_IO_HPP_
