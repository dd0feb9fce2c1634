#include "config.hpp"

#include <fstream>
#include <sstream>

#include "latgeo/heights.hpp"
#include "latgeo/lattice.hpp"

namespace latgeo::cli {

namespace {

constexpr const char* kConfigVersion = "1";

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

}  // namespace

Section::Section(const json& in, std::string path, json* out)
    : in_(&in), path_(std::move(path)), out_(out) {
  if (!in.is_object()) throw ConfigError(path_ + ": expected an object");
  if (!out_->is_object()) *out_ = json::object();
}

bool Section::has(const std::string& key) const { return in_->contains(key); }

void Section::fail(const std::string& key, const std::string& msg) const {
  throw ConfigError("config: " + path_ + "." + key + ": " + msg);
}

const json& Section::raw(const std::string& key) {
  seen_.insert(key);
  if (!in_->contains(key)) fail(key, "missing required key");
  return in_->at(key);
}

double Section::number(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_number()) fail(key, "expected a number");
  const double x = v.get<double>();
  (*out_)[key] = x;
  return x;
}

double Section::number(const std::string& key, double def) {
  if (!has(key)) {
    seen_.insert(key);
    (*out_)[key] = def;
    return def;
  }
  return number(key);
}

std::int64_t Section::integer(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_number_integer()) fail(key, "expected an integer");
  const auto x = v.get<std::int64_t>();
  (*out_)[key] = x;
  return x;
}

std::int64_t Section::integer(const std::string& key, std::int64_t def) {
  if (!has(key)) {
    seen_.insert(key);
    (*out_)[key] = def;
    return def;
  }
  return integer(key);
}

bool Section::boolean(const std::string& key, bool def) {
  seen_.insert(key);
  bool x = def;
  if (has(key)) {
    const json& v = in_->at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    x = v.get<bool>();
  }
  (*out_)[key] = x;
  return x;
}

std::string Section::string(const std::string& key, const std::string& def) {
  seen_.insert(key);
  std::string x = def;
  if (has(key)) {
    const json& v = in_->at(key);
    if (!v.is_string()) fail(key, "expected a string");
    x = v.get<std::string>();
  }
  (*out_)[key] = x;
  return x;
}

std::vector<double> Section::numbers(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) fail(key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  (*out_)[key] = out;
  return out;
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& def) {
  if (!has(key)) {
    seen_.insert(key);
    (*out_)[key] = def;
    return def;
  }
  return numbers(key);
}

IVec Section::integers(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
    fail(key, "expected a nonempty array of at most 8 integers");
  IVec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) fail(key, "expected integers");
    out(static_cast<int>(i)) = v[i].get<std::int64_t>();
  }
  (*out_)[key] = std::vector<std::int64_t>(out.data(), out.data() + out.size());
  return out;
}

IVec Section::integers(const std::string& key, const IVec& def) {
  if (!has(key)) {
    seen_.insert(key);
    (*out_)[key] = std::vector<std::int64_t>(def.data(), def.data() + def.size());
    return def;
  }
  return integers(key);
}

std::vector<std::string> Section::strings(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_array()) fail(key, "expected an array of expression strings");
  std::vector<std::string> out;
  for (const json& e : v) {
    if (!e.is_string()) fail(key, "expected an array of expression strings");
    out.push_back(e.get<std::string>());
  }
  (*out_)[key] = out;
  return out;
}

std::vector<std::string> Section::strings(const std::string& key,
                                          const std::vector<std::string>& def) {
  if (!has(key)) {
    seen_.insert(key);
    (*out_)[key] = def;
    return def;
  }
  return strings(key);
}

Section Section::child(const std::string& key) {
  const json& v = raw(key);
  (*out_)[key] = json::object();
  return Section(v, path_ + "." + key, &(*out_)[key]);
}

Section Section::child_or_empty(const std::string& key) {
  static const json empty = json::object();
  if (has(key)) return child(key);
  seen_.insert(key);
  (*out_)[key] = json::object();
  return Section(empty, path_ + "." + key, &(*out_)[key]);
}

std::vector<Section> Section::children(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_array()) fail(key, "expected an array of objects");
  json& arr = (*out_)[key] = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) arr.push_back(json::object());
  std::vector<Section> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.emplace_back(v[i], path_ + "." + key + "[" + std::to_string(i) + "]", &arr[i]);
  return out;
}

void Section::finish() const {
  for (const auto& [key, value] : in_->items()) {
    (void)value;
    if (!seen_.count(key)) throw ConfigError("config: " + path_ + ": unknown key '" + key + "'");
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

Root::Root(const json& in, std::optional<std::uint64_t> seed_override)
    : section(in, "$", &resolved) {
  const std::string version = section.string("version", kConfigVersion);
  if (version != kConfigVersion) section.fail("version", "unsupported config version " + version);
  const std::int64_t s = section.integer("seed", 1);
  if (s < 0) section.fail("seed", "must be non-negative");
  seed = seed_override.value_or(static_cast<std::uint64_t>(s));
  resolved["seed"] = seed;
}

funcspec::ParamBox read_box(Section sec) {
  const std::vector<double> lo = sec.numbers("lo");
  const std::vector<double> hi = sec.numbers("hi");
  sec.finish();
  if (lo.empty() || lo.size() != hi.size()) sec.fail("hi", "lo and hi need equal nonzero length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) sec.fail("hi", "needs lo < hi in every coordinate");
  return funcspec::ParamBox{to_vec(lo), to_vec(hi)};
}

torus::Scene read_scene(Section sec) {
  torus::Scene sc;
  sc.d = static_cast<int>(sec.integer("d"));
  if (sc.d < 2 || sc.d > 6) sec.fail("d", "must lie in 2..6");
  sc.U = read_box(sec.child("U"));
  const int n = sc.U.dim();
  sc.theta = funcspec::FuncFamily::parse(sec.strings("theta"), sc.d, 1, n);
  sc.f = funcspec::FuncFamily::parse(sec.strings("f"), sc.d, 1, n, true);
  std::vector<Section> targets = sec.children("targets");
  if (targets.empty()) sec.fail("targets", "need at least one target");
  sc.k = static_cast<int>(targets.size());
  for (Section& t : targets) {
    sc.u.push_back(funcspec::FuncFamily::parse(t.strings("u"), sc.d, 1, n, true));
    sc.phi.push_back(funcspec::FuncFamily::parse(t.strings("phi"), sc.d, 1, n));
    Section om = t.child("omega");
    const std::string shape = om.string("shape", "box");
    if (shape == "box") {
      sc.omega.push_back(torus::RegionFamily::box(
          funcspec::FuncFamily::parse(om.strings("lo"), sc.d - 1, 1, n),
          funcspec::FuncFamily::parse(om.strings("hi"), sc.d - 1, 1, n)));
    } else if (shape == "ball") {
      const std::string radius = om.string("radius", "");
      if (radius.empty()) om.fail("radius", "missing required key");
      sc.omega.push_back(torus::RegionFamily::ball(
          funcspec::FuncFamily::parse(om.strings("center"), sc.d - 1, 1, n),
          funcspec::FuncFamily::parse({radius}, 1, 1, n)));
    } else {
      om.fail("shape", "expected \"box\" or \"ball\"");
    }
    om.finish();
    t.finish();
  }
  sec.finish();
  sc.validate();
  return sc;
}

groups::FlowParams read_flow(Section& sec) {
  Section f = sec.child("flow");
  const auto d = f.integer("d", 2);
  const auto r = f.integer("r", 1);
  f.finish();
  if (d < 2 || d > groups::kMaxGroupDim) f.fail("d", "must lie in 2..6");
  if (r < 1 || r >= d) f.fail("r", "must lie in 1..d-1");
  return groups::FlowParams(static_cast<int>(d), static_cast<int>(r));
}

funcspec::FuncFamily read_phi(Section& sec, const groups::FlowParams& p, int k) {
  const std::vector<std::string> texts = sec.strings("phi");
  if (static_cast<int>(texts.size()) != p.d * k)
    sec.fail("phi", "expected d * k = " + std::to_string(p.d * k) + " expressions (row-major)");
  return funcspec::FuncFamily::parse(texts, p.d, k, p.horo_dim());
}

ergodic::Observable read_observable(Section sec, const groups::FlowParams& p) {
  using ergodic::Observable;
  const std::string kind = sec.string("kind", "bump");
  Observable obs = Observable::constant(0.0);
  if (kind == "bump") {
    const double rho = sec.number("rho", 1.0);
    const double amp = sec.number("amplitude", 1.0);
    obs = Observable::bump(rho, amp, static_cast<int>(sec.integer("grid", 0)));
  } else if (kind == "smooth_ball") {
    const double radius = sec.number("radius", 1.0);
    const double width = sec.number("width", 0.5);
    obs = Observable::smooth_ball(radius, width, static_cast<int>(sec.integer("grid", 0)));
  } else if (kind == "constant") {
    obs = Observable::constant(sec.number("value", 1.0));
  } else if (kind == "inv_height") {
    const double eps = sec.number("eps", lattice::kDefaultEps);
    obs = Observable::inv_height(eps, sec.number("nu", lattice::default_nu(p.r, p.d)));
  } else if (kind == "beta_level") {
    const IVec m = sec.integers("m");
    const double nu = sec.number("nu", lattice::default_nu(p.r, p.d));
    const double eps = sec.number("eps", lattice::kDefaultEps);
    const double t_step = sec.number("t_step");
    const double level = sec.number("level");
    obs = Observable::beta_level(heights::MIndex(m), heights::MixedHeightParams(p, nu, eps, t_step),
                                 level);
  } else {
    sec.fail("kind", "unknown observable kind '" + kind + "'");
  }
  sec.finish();
  return obs;
}

}  // namespace latgeo::cli
