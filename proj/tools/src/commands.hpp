#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace latgeo::cli {

struct Context {
  std::string out_dir = ".";
  int workers = 1;
  bool oracle = false;
  std::optional<std::uint64_t> seed;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

// Each command reads its config, writes its output files into ctx.out_dir
// and returns the process exit code. Config problems throw ConfigError.
int simulate_hits(const nlohmann::json& cfg, const Context& ctx);
int birkhoff(const nlohmann::json& cfg, const Context& ctx);
int limit_law(const nlohmann::json& cfg, const Context& ctx);
int genericity_check(const nlohmann::json& cfg, const Context& ctx);
int contraction_test(const nlohmann::json& cfg, const Context& ctx);
int correlation(const nlohmann::json& cfg, const Context& ctx);

}  // namespace latgeo::cli
