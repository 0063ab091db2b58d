// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mmrank Authors

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmrank {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, const char* expected) {
  const std::string t = trim(text);
  T value{};
  const auto r = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw std::invalid_argument(std::string(key) + ": expected " + expected + ", got '" + t + "'");
  }
  return value;
}

inline int parse_int(std::string_view key, std::string_view text) {
  return parse_number<int>(key, text, "an integer");
}

inline std::int64_t parse_int64(std::string_view key, std::string_view text) {
  return parse_number<std::int64_t>(key, text, "an integer");
}

inline std::uint64_t parse_uint64(std::string_view key, std::string_view text) {
  return parse_number<std::uint64_t>(key, text, "a non-negative integer");
}

inline double parse_double(std::string_view key, std::string_view text) {
  return parse_number<double>(key, text, "a number");
}

/// Reads `key = value` lines; '#' starts a comment. Throws std::invalid_argument
/// on lines without '=' and on repeated keys.
inline std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    for (const auto& [k, v] : out) {
      if (k == key) {
        throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                    ": duplicate key '" + key + "'");
      }
    }
    out.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

}  // namespace mmrank
