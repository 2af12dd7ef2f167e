#pragma once

// Helpers for the key=value text blocks embedded in model containers.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sz3d/errors.hpp"
#include "sz3d/kernels.hpp"

namespace sz3d::text {

inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected key=value, got '" + std::string(line) + "'");
    std::string key(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::string(line.substr(eq + 1)));
  }
  return out;
}

inline std::uint64_t parse_uint(std::string_view v, std::string_view key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad integer for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

inline double parse_double(std::string_view v, std::string_view key) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad number for " + std::string(key) + ": '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("bad boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

inline std::vector<std::string_view> split(std::string_view v, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = v.find(sep, pos);
    parts.push_back(v.substr(pos, end == std::string_view::npos ? v.npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return parts;
}

/// "61x73x61"
inline Triple parse_triple(std::string_view v, std::string_view key) {
  const auto parts = split(v, 'x');
  if (parts.size() != 3)
    throw ConfigError("expected DxHxW for " + std::string(key) + ", got '" + std::string(v) + "'");
  return {parse_uint(parts[0], key), parse_uint(parts[1], key), parse_uint(parts[2], key)};
}

inline std::vector<std::size_t> parse_uint_list(std::string_view v, std::string_view key) {
  std::vector<std::size_t> out;
  if (v.empty()) return out;
  for (auto p : split(v, ',')) out.push_back(parse_uint(p, key));
  return out;
}

inline std::vector<double> parse_double_list(std::string_view v, std::string_view key) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (auto p : split(v, ',')) out.push_back(parse_double(p, key));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << values[i];
  }
  return os.str();
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace sz3d::text
