#pragma once

// CSV formatting, file digests and run manifests.

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace qchaos::cli {

/// 17 significant digits, locale independent.
std::string fmt(double v);
std::string fmt(std::int64_t v);
/// Shortest representation that parses back to the same double.
std::string round_trip(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::string_view header);
  template <class... Fields>
  void row(const Fields&... fields) {
    std::size_t i = 0;
    ((body_ += (i++ ? "," : ""), body_ += cell(fields)), ...);
    body_ += '\n';
    ++rows_;
  }
  const std::string& text() const noexcept { return body_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return fmt(static_cast<std::int64_t>(v)); }
  static std::string cell(std::int64_t v) { return fmt(v); }
  static std::string cell(std::size_t v) { return fmt(static_cast<std::int64_t>(v)); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::string body_;
  std::size_t rows_ = 0;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);
std::string iso8601_utc(std::chrono::system_clock::time_point t);

/// Writes text to path, creating parent directories. Throws std::runtime_error.
void write_file(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace qchaos::cli
