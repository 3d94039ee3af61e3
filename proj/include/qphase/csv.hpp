// Copyright 2026 The qphase Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef QPHASE_CSV_HPP
#define QPHASE_CSV_HPP

// Minimal CSV plumbing shared by every artifact file. Lines starting with '#'
// are comments; fields never contain commas or quotes.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qphase/error.hpp"

namespace qphase::csv {

/// 17 significant digits: enough for an exact binary64 round trip.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest representation that round-trips; used for file names and reports.
inline std::string format_short(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(std::string_view field, const std::string &where) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty())
    throw DataError(where + ": invalid number '" + std::string(field) + "'");
  return v;
}

inline long long parse_int(std::string_view field, const std::string &where) {
  long long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || field.empty())
    throw DataError(where + ": invalid integer '" + std::string(field) + "'");
  return v;
}

/// A CSV file split into comment lines, the header, and data rows.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based physical line number of each data row, for error messages.
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name, const std::string &file) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw DataError(file + ": missing column '" + std::string(name) + "'");
  }
};

inline Table read_table(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      t.comments.push_back(line);
      continue;
    }
    std::vector<std::string> fields;
    for (auto f : split(line)) fields.emplace_back(f);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw DataError(path.filename().string() + ": row " +
                      std::to_string(t.rows.size() + 1) + " (line " +
                      std::to_string(lineno) + ") has " + std::to_string(fields.size()) +
                      " columns, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DataError(path.string() + ": no header row");
  return t;
}

/// Looks up `key=value` inside comment lines, e.g. "# grid g_max=2 g_count=10".
inline std::string comment_value(const std::vector<std::string> &comments,
                                 std::string_view key) {
  const std::string needle = std::string(key) + "=";
  for (const auto &c : comments) {
    std::istringstream ss(c.substr(1));
    std::string tok;
    while (ss >> tok)
      if (tok.rfind(needle, 0) == 0) return tok.substr(needle.size());
  }
  return {};
}

inline void write_comments(std::ostream &out, const std::vector<std::string> &comments) {
  for (const auto &c : comments) out << "# " << c << '\n';
}

inline std::ofstream open_for_write(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace qphase::csv

#endif  // QPHASE_CSV_HPP
