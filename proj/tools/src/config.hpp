#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "latgeo/ergodic.hpp"
#include "latgeo/funcspec.hpp"
#include "latgeo/torus.hpp"

namespace latgeo::cli {

using nlohmann::json;

/// Malformed or inconsistent configuration; exit code 2.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Typed view of one JSON object. Every read records the value actually
/// used (default or given) into the resolved echo; finish() rejects keys
/// that were never read.
class Section {
 public:
  /// `out` receives the resolved object and must outlive the section.
  Section(const json& in, std::string path, json* out);

  bool has(const std::string& key) const;
  double number(const std::string& key);
  double number(const std::string& key, double def);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t def);
  bool boolean(const std::string& key, bool def);
  std::string string(const std::string& key, const std::string& def);
  std::vector<double> numbers(const std::string& key);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def);
  /// Integer vector (e.g. an index m).
  IVec integers(const std::string& key);
  IVec integers(const std::string& key, const IVec& def);
  std::vector<std::string> strings(const std::string& key);
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def);
  Section child(const std::string& key);
  /// Like child(), but a missing key reads as {} so that defaults are echoed.
  Section child_or_empty(const std::string& key);
  /// Array of objects.
  std::vector<Section> children(const std::string& key);

  void finish() const;
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const;
  const std::string& path() const { return path_; }

 private:
  const json& raw(const std::string& key);
  const json* in_;
  std::string path_;
  json* out_;
  std::set<std::string> seen_;
};

/// Parses the file; json parse errors become ConfigError with the byte
/// position.
json load_json(const std::string& path);

/// The config root: checks "version" and reads "seed" (overridable).
struct Root {
  json resolved = json::object();
  Section section;
  std::uint64_t seed = 1;

  Root(const json& in, std::optional<std::uint64_t> seed_override);
  Root(const Root&) = delete;
  Root& operator=(const Root&) = delete;
};

torus::Scene read_scene(Section sec);
funcspec::ParamBox read_box(Section sec);
groups::FlowParams read_flow(Section& sec);
/// phi as a d x k family of the r (d - r) horospherical parameters.
funcspec::FuncFamily read_phi(Section& sec, const groups::FlowParams& p, int k);
ergodic::Observable read_observable(Section sec, const groups::FlowParams& p);

}  // namespace latgeo::cli
