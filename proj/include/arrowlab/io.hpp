#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "arrowlab/ode/trajectory.hpp"

namespace arrowlab::io {

/// Filesystem failure while writing or reading run artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-unambiguous rendering with 17 significant digits.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("fmt_double: conversion failed");
  return std::string(buf, end);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) {
    row_begin();
    for (const auto& h : header) field(h);
    row_end();
  }

  CsvWriter& field(std::string_view s) {
    if (col_++ > 0) out_ << ',';
    out_ << s;
    return *this;
  }
  CsvWriter& field(double v) { return field(fmt_double(v)); }
  CsvWriter& field(long long v) { return field(std::to_string(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& field(std::size_t v) { return field(std::to_string(v)); }
  CsvWriter& field(bool v) { return field(v ? std::string_view("1") : std::string_view("0")); }

  void row_begin() { col_ = 0; }
  void row_end() {
    if (col_ != columns_) throw std::logic_error("csv row has wrong number of fields");
    out_ << '\n';
    col_ = 0;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

/// Trajectory as CSV with header `t,c0,c1,...`.
template <std::size_t N>
std::string trajectory_csv(const ode::Trajectory<N>& traj) {
  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < N; ++i) header.push_back("c" + std::to_string(i));
  CsvWriter w(header);
  for (const auto& s : traj.samples()) {
    w.row_begin();
    w.field(s.t);
    for (double c : s.x) w.field(c);
    w.row_end();
  }
  return w.str();
}

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace arrowlab::io
