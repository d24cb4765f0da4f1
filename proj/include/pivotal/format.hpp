#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

namespace pivotal {

/// Six significant digits; `inf` / `-inf` / `nan` for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // drops the sign of -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Shortest representation that round-trips.
inline std::string format_exact(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Full-precision JSON value; non-finite values become the strings
/// "inf" / "-inf" / "nan".
inline nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

/// Inverse of json_number.
inline double json_to_double(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  auto s = j.get<std::string>();
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  return std::nan("");
}

/// Quoted DOT identifier.
inline std::string dot_id(std::string_view label) {
  std::string out = "\"";
  for (char c : label) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace pivotal
