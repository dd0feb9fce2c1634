#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace latgeo::cli {

using nlohmann::json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Shortest text of a double that is exact to 17 significant digits; no
/// locale involvement.
std::string format_double(double v);

/// RFC 4180 CSV built in memory. Fields with a comma, quote, CR or LF are
/// quoted and inner quotes doubled; records end in CRLF.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  Csv& field(double v);
  Csv& field(std::int64_t v);
  Csv& field(const std::string& v);
  /// Throws std::logic_error when the record width differs from the header.
  void end_row();
  const std::string& text() const { return text_; }

 private:
  void put(const std::string& raw);
  std::size_t width_;
  std::size_t in_row_ = 0;
  std::string text_;
};

/// Run-level metadata; the JSON line that opens every output file.
struct RunInfo {
  std::string command;
  json config;  // fully resolved, defaults filled
  std::uint64_t seed = 0;
  int workers = 1;
  double wall_time_s = 0.0;
};

std::string metadata_line(const RunInfo& info);

/// Writes metadata line + body to dir/name; returns the path.
std::string write_output(const std::string& dir, const std::string& name, const RunInfo& info,
                         const std::string& body);

}  // namespace latgeo::cli
