#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace weightcaster::detail {

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, delim)) fields.push_back(cur);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

// Strips whitespace, quotes and a UTF-8 byte-order mark.
inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"\xEF\xBB\xBF");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

// Strict decimal-point parse of a whole field.
inline bool parse_finite(const std::string& f, double& v) {
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  return !f.empty() && ec == std::errc() && ptr == f.data() + f.size() && std::isfinite(v);
}

}  // namespace weightcaster::detail
