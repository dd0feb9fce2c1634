#include "output.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "latgeo/types.hpp"

namespace latgeo::cli {

namespace {
constexpr const char* kVersion = "0.1.0";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) {
  for (const auto& h : header) field(h);
  end_row();
}

Csv& Csv::field(double v) {
  put(format_double(v));
  return *this;
}

Csv& Csv::field(std::int64_t v) {
  put(std::to_string(v));
  return *this;
}

Csv& Csv::field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) {
    put(v);
    return *this;
  }
  std::string q = "\"";
  for (char c : v) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  put(q);
  return *this;
}

void Csv::put(const std::string& raw) {
  if (in_row_ > 0) text_ += ',';
  text_ += raw;
  ++in_row_;
}

void Csv::end_row() {
  if (in_row_ != width_) throw std::logic_error("csv row width differs from the header");
  text_ += "\r\n";
  in_row_ = 0;
}

std::string metadata_line(const RunInfo& info) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(info.config.dump())));
  json meta = {{"tool", "latgeo-cli"},
               {"version", kVersion},
               {"command", info.command},
               {"config_hash", hash},
               {"seed", info.seed},
               {"workers", info.workers},
               {"wall_time_s", info.wall_time_s},
               {"config", info.config}};
  return meta.dump();
}

std::string write_output(const std::string& dir, const std::string& name, const RunInfo& info,
                         const std::string& body) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << metadata_line(info) << '\n' << body;
  if (!out) throw Error("cannot write " + path);
  return path;
}

}  // namespace latgeo::cli
