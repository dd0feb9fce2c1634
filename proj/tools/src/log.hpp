#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace latgeo::cli {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold from LATGEO_LOG (error|warn|info|debug); warn when unset or
/// unrecognized.
inline Level log_threshold() {
  static const Level level = [] {
    const char* env = std::getenv("LATGEO_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

inline void log(Level level, const std::string& msg) {
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  if (level > log_threshold()) return;
  std::cerr << "[latgeo] " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

}  // namespace latgeo::cli
