#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace assocu {

// Shortest decimal literal that parses back to the same double.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buf, ptr};
}

// Newline-delimited series: one decimal literal per line, UTF-8.
inline void write_series(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (double v : values) out << format_double(v) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

// Blank lines (including a trailing one) are skipped; anything else that is
// not a complete finite decimal literal is an error naming the line.
[[nodiscard]] inline std::vector<double> read_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open series file '" + path.string() + "'");
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
    while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t')) sv.remove_prefix(1);
    if (sv.empty()) continue;
    if (sv.front() == '+') sv.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size() || !std::isfinite(v)) {
      throw std::runtime_error("malformed series line " + std::to_string(lineno) + " in '" + path.string() +
                               "': '" + line + "'");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace assocu
