#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cheegerlab/error.hpp"

namespace cheegerlab {

/// Shortest decimal string that round-trips to the same double.
/// Independent of the C locale; non-finite values print as nan/inf/-inf.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Locale-independent strict double parse (whole token must be consumed).
inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ParseError("not a number: '" + std::string(text) + "'");
  return v;
}

/// Writes one CSV row of doubles.
inline void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    out << format_double(values[i]);
  }
  out << '\n';
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

} // namespace cheegerlab
