// Apache License, Version 2.0, refer to LICENSE.txt

// Minimal comma-separated reader for the flat numeric files used here.
// Fields never contain quotes or embedded commas.

#ifndef HCOUNT_SRC_CSV_HPP
#define HCOUNT_SRC_CSV_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hcount/data_model.hpp"

namespace hcount::csv {

struct Row {
  int line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Returns header fields and data rows; blank lines and '#' comments skipped.
inline std::vector<Row> parse(const std::string& text, std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  std::vector<Row> rows;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_header) {
      header = split(t);
      have_header = true;
      continue;
    }
    rows.push_back({lineno, split(t)});
  }
  if (!have_header) throw ValidationError("empty file: no header row");
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void expect_header(const std::vector<std::string>& header,
                          const std::vector<std::string>& expected, const std::string& what) {
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw ValidationError(what + ": header must be '" + want + "'");
  }
}

inline std::int64_t to_int(const std::string& s, int line, const char* field) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ValidationError("row " + std::to_string(line) + ": field '" + field +
                          "' is not an integer: '" + s + "'");
  return v;
}

inline double to_double(const std::string& s, int line, const char* field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(line) + ": field '" + field +
                          "' is not a number: '" + s + "'");
  }
}

}  // namespace hcount::csv

#endif  // HCOUNT_SRC_CSV_HPP
