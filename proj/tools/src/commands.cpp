#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "config.hpp"
#include "latgeo/ergodic.hpp"
#include "latgeo/heights.hpp"
#include "latgeo/limitlaw.hpp"
#include "latgeo/random.hpp"
#include "latgeo/torus.hpp"
#include "log.hpp"
#include "output.hpp"

namespace latgeo::cli {

namespace {

RunInfo finish_info(const std::string& command, const Root& root, const Context& ctx) {
  RunInfo info;
  info.command = command;
  info.config = root.resolved;
  info.seed = root.seed;
  info.workers = ctx.workers;
  info.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  return info;
}

void emit(const Context& ctx, const RunInfo& info, const std::string& name, const std::string& body) {
  const std::string path = write_output(ctx.out_dir, name, info, body);
  log(Level::Info, "wrote " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Vec midpoint(const funcspec::ParamBox& box) { return (box.lo + box.hi) / 2.0; }

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec to_vec(const std::vector<double>& v) {
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

std::vector<std::int64_t> to_std(const IVec& v) {
  return std::vector<std::int64_t>(v.data(), v.data() + v.size());
}

Mat to_s(const groups::FlowParams& p, const Vec& flat) {
  Mat s(p.r, p.cols());
  for (int i = 0; i < p.r; ++i)
    for (int j = 0; j < p.cols(); ++j) s(i, j) = flat(i * p.cols() + j);
  return s;
}

Vec read_point(Section& sec, const std::string& key, const Vec& def, int dim) {
  const std::vector<double> v = sec.numbers(key, to_std(def));
  if (static_cast<int>(v.size()) != dim) sec.fail(key, "expected " + std::to_string(dim) + " entries");
  return to_vec(v);
}

// Nonzero m in [-M, M]^k with first nonzero entry positive.
std::vector<IVec> m_range(int k, std::int64_t M) {
  std::vector<IVec> out;
  IVec m = IVec::Constant(k, -M);
  while (true) {
    int first = 0;
    while (first < k && m(first) == 0) ++first;
    if (first < k && m(first) > 0) out.push_back(m);
    int i = k - 1;
    while (i >= 0 && m(i) == M) m(i--) = -M;
    if (i < 0) break;
    ++m(i);
  }
  return out;
}

std::vector<IVec> read_m_list(Section& sec, int k) {
  if (sec.has("m")) {
    const IVec m = sec.integers("m");
    if (m.size() != k) sec.fail("m", "expected " + std::to_string(k) + " entries");
    if (m.isZero()) sec.fail("m", "must be nonzero");
    return {m};
  }
  const std::int64_t M = sec.integer("m_max", 3);
  if (M < 1 || M > 20) sec.fail("m_max", "must lie in 1..20");
  return m_range(k, M);
}

json event_json(const torus::HitEvent& e) {
  return {{"t", e.t_abs}, {"target", e.j}, {"k", to_std(e.kvec)}};
}

json estimate_json(const limitlaw::DistEstimate& e) {
  return {{"method", e.method},       {"samples", e.samples},
          {"rejected", e.rejected},   {"joint_T", e.joint_T},
          {"joint_prob", e.joint_prob}, {"joint_se", e.joint_se},
          {"cdf_grid", e.cdf_grid},   {"marginals", e.marginals},
          {"std_error", e.std_error}, {"mean_count", e.mean_count},
          {"mean_count_se", e.mean_count_se}};
}

}  // namespace

int simulate_hits(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  const torus::Scene sc = read_scene(sec.child("scene"));
  const Vec s = read_point(sec, "s", midpoint(sc.U), sc.U.dim());
  const double l = sec.number("l", 0.0);
  const double sigma = torus::mean_return_sigma(sc, s);
  double t_max = 0.0;
  if (sec.has("t_max")) {
    t_max = sec.number("t_max");
  } else {
    const double horizon = sec.number("horizon", 50.0);
    t_max = horizon * std::exp((sc.d - 1) * l) * sigma;
  }
  sec.finish();

  const torus::HitSeries hs = torus::hit_times(sc, s, l, t_max);
  const std::vector<double> tau = torus::normalized_times(hs, sc, s, l);

  std::vector<std::string> header{"index", "t", "tau", "target"};
  for (int i = 1; i < sc.d; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= sc.d; ++i) header.push_back("k" + std::to_string(i));
  Csv csv(header);
  for (std::size_t i = 0; i < hs.events.size(); ++i) {
    const torus::HitEvent& e = hs.events[i];
    csv.field(static_cast<std::int64_t>(i)).field(e.t_abs).field(tau[i]).field(static_cast<std::int64_t>(e.j));
    for (int a = 0; a < e.x_local.size(); ++a) csv.field(e.x_local(a));
    for (int a = 0; a < e.kvec.size(); ++a) csv.field(static_cast<std::int64_t>(e.kvec(a)));
    csv.end_row();
  }

  json summary = {{"events", hs.events.size()}, {"sigma", sigma}, {"t_max", t_max}, {"l", l}};
  summary["mean_normalized_gap"] = tau.empty() ? 0.0 : tau.back() / static_cast<double>(tau.size());
  int code = 0;
  if (ctx.oracle) {
    const torus::HitSeries ref = torus::hit_times_oracle(sc, s, l, t_max);
    json diff = json::array();
    double max_dt = 0.0;
    const std::size_t n = std::max(hs.events.size(), ref.events.size());
    for (std::size_t i = 0; i < n && diff.size() < 20; ++i) {
      if (i >= hs.events.size() || i >= ref.events.size()) {
        diff.push_back({{"index", i}, {"missing_in", i >= hs.events.size() ? "enumeration" : "oracle"}});
        continue;
      }
      const auto& a = hs.events[i];
      const auto& b = ref.events[i];
      const double dt = std::abs(a.t_abs - b.t_abs);
      max_dt = std::max(max_dt, dt);
      if (dt > 1e-9 || a.j != b.j || a.kvec != b.kvec)
        diff.push_back({{"index", i}, {"enumeration", event_json(a)}, {"oracle", event_json(b)}});
    }
    summary["oracle"] = {{"events", ref.events.size()}, {"max_time_difference", max_dt}, {"diff", diff}};
    if (!diff.empty()) {
      log(Level::Error, "enumeration and oracle disagree on " + std::to_string(diff.size()) + " events");
      code = 3;
    }
  }
  const RunInfo info = finish_info("simulate-hits", root, ctx);
  emit(ctx, info, "hits.csv", csv.text());
  emit(ctx, info, "hits_summary.json", dump(summary));
  return code;
}

int birkhoff(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  const groups::FlowParams p = read_flow(sec);
  const std::string kind = sec.string("flow_kind", "at");
  if (kind != "at" && kind != "d") sec.fail("flow_kind", "expected \"at\" or \"d\"");
  const auto k = sec.integer("k", 1);
  if (k < 1 || k > 4) sec.fail("k", "must lie in 1..4");
  const funcspec::FuncFamily phi = read_phi(sec, p, static_cast<int>(k));
  const Vec s = read_point(sec, "s", Vec::Constant(p.horo_dim(), 0.5), p.horo_dim());
  ergodic::TrajectorySpec spec;
  spec.flow = kind == "at" ? ergodic::FlowKind::AT : ergodic::FlowKind::D;
  spec.params = p;
  spec.T = sec.number("T", 200.0);
  spec.dt = sec.number("dt", 1.0 / 64.0);
  spec.reduce = sec.boolean("reduce", true);
  const ergodic::Observable obs = read_observable(sec.child_or_empty("observable"), p);
  std::optional<heights::MIndex> check_m;
  if (sec.has("check_m")) check_m = heights::MIndex(sec.integers("check_m"));
  sec.finish();
  spec.base = groups::u_phi(p, to_s(p, s), phi.evaluate(s));

  const ergodic::BirkhoffResult r = ergodic::birkhoff_average(spec, obs);
  Csv csv({"time", "value", "running_average"});
  for (std::size_t i = 0; i < r.times.size(); ++i)
    csv.field(r.times[i]).field(r.values[i]).field(r.running_averages[i]).end_row();

  json summary = {{"observable", obs.describe()}, {"final", r.final}, {"std_error", r.std_error},
                  {"dt", r.dt}, {"samples", r.values.size()}};
  if (r.reference) {
    summary["reference"] = *r.reference;
    summary["deviation_in_std_errors"] =
        r.std_error > 0.0 ? (r.final - *r.reference) / r.std_error : 0.0;
  }
  if (check_m) {
    std::size_t inside = 0;
    const auto pts = ergodic::trajectory(spec);
    for (const auto& x : pts)
      if (heights::in_X_m(x.x, *check_m, 1e-9)) ++inside;
    summary["in_X_m_fraction"] = static_cast<double>(inside) / static_cast<double>(pts.size());
  }
  const RunInfo info = finish_info("birkhoff", root, ctx);
  emit(ctx, info, "birkhoff.csv", csv.text());
  emit(ctx, info, "birkhoff_summary.json", dump(summary));
  return 0;
}

int limit_law(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  limitlaw::LimitLawSpec spec;
  spec.scene = read_scene(sec.child("scene"));
  spec.s = read_point(sec, "s", midpoint(spec.scene.U), spec.scene.U.dim());
  const std::vector<std::string> methods =
      sec.strings("methods", {"birkhoff_l", "s_average", "haar_mc"});
  spec.joint_T = sec.numbers("joint_T", spec.joint_T);
  spec.cdf_grid = sec.numbers("cdf_grid", spec.cdf_grid);
  spec.cdf_order = static_cast<int>(sec.integer("cdf_order", spec.cdf_order));
  spec.moment_T = sec.number("moment_T", spec.moment_T);
  spec.L = sec.number("L", spec.L);
  spec.dl = sec.number("dl", spec.dl);
  spec.l_fixed = sec.number("l_fixed", spec.l_fixed);
  spec.s_grid = static_cast<int>(sec.integer("s_grid", spec.s_grid));
  const auto samples = sec.integer("samples", static_cast<std::int64_t>(spec.samples));
  if (samples < 1 || samples > 100'000'000) sec.fail("samples", "must lie in 1..1e8");
  spec.samples = static_cast<std::size_t>(samples);
  spec.screen_height = sec.integer("screen_height", spec.screen_height);
  sec.finish();
  spec.seed = root.seed;
  spec.validate();
  if (methods.empty()) sec.fail("methods", "need at least one method");
  for (const std::string& m : methods) {
    if (m != "birkhoff_l" && m != "s_average" && m != "haar_mc")
      sec.fail("methods", "unknown method '" + m + "'");
    if (m == "haar_mc" && spec.scene.d != 2)
      throw UnsupportedError("haar_mc is implemented for d = 2 only");
  }

  const Parallelism par{ctx.workers};
  std::vector<limitlaw::DistEstimate> est;
  for (const std::string& m : methods) {
    log(Level::Info, "running " + m);
    if (m == "birkhoff_l") est.push_back(limitlaw::empirical_birkhoff_cdf(spec, par));
    if (m == "s_average") est.push_back(limitlaw::estimate_limit_cdf_s_average(spec, par));
    if (m == "haar_mc") est.push_back(limitlaw::estimate_limit_cdf_mc(spec, par));
  }
  json out = {{"estimates", json::array()}, {"ks", json::array()}};
  Csv csv({"method", "T", "cdf", "std_error"});
  for (const auto& e : est) {
    out["estimates"].push_back(estimate_json(e));
    for (std::size_t i = 0; i < e.cdf_grid.size(); ++i)
      csv.field(e.method).field(e.cdf_grid[i]).field(e.marginals[i]).field(e.std_error[i]).end_row();
  }
  for (std::size_t a = 0; a < est.size(); ++a)
    for (std::size_t b = a + 1; b < est.size(); ++b)
      out["ks"].push_back({{"a", est[a].method}, {"b", est[b].method},
                           {"ks", limitlaw::ks_distance(est[a], est[b])}});
  const RunInfo info = finish_info("limit-law", root, ctx);
  emit(ctx, info, "limit_law.json", dump(out));
  emit(ctx, info, "limit_law_cdf.csv", csv.text());
  return 0;
}

int genericity_check(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  const std::string mode = sec.string("mode", "bad_m");
  json out = {{"mode", mode}, {"reports", json::array()}};
  const Parallelism par{ctx.workers};
  if (mode == "bad_m") {
    const groups::FlowParams p = read_flow(sec);
    const auto k = sec.integer("k", 1);
    if (k < 1 || k > 4) sec.fail("k", "must lie in 1..4");
    const funcspec::FuncFamily phi = read_phi(sec, p, static_cast<int>(k));
    const funcspec::ParamBox U = read_box(sec.child("U"));
    if (U.dim() != p.horo_dim()) sec.fail("U", "must have r (d - r) coordinates");
    const std::vector<IVec> ms = read_m_list(sec, static_cast<int>(k));
    const double tol = sec.number("tol", 1e-3);
    const auto grid = sec.integer("grid", 4096);
    if (grid < 1 || grid > 1'000'000) sec.fail("grid", "must lie in 1..1e6");
    sec.finish();
    const auto reports = parallel_map(ms.size(), par, [&](std::size_t i) {
      return heights::bad_m_scan(phi, U, heights::MIndex(ms[i]), p, tol, static_cast<int>(grid));
    });
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const heights::BadMReport& r = reports[i];
      json w = json::array();
      for (std::size_t h = 0; h < r.flagged.size() && h < 10; ++h)
        w.push_back({{"s", to_std(r.flagged[h].s)}, {"a", to_std(r.flagged[h].a)},
                     {"b", to_std(r.flagged[h].b)}, {"residual", r.flagged[h].residual}});
      out["reports"].push_back({{"m", to_std(ms[i])},
                                {"grid_points", r.grid_points},
                                {"flagged", r.flagged.size()},
                                {"flagged_fraction", r.flagged_fraction},
                                {"M1", r.m1.m1},
                                {"N1", r.m1.n1},
                                {"sup_partial", r.m1.sup_partial},
                                {"witnesses", w}});
    }
  } else if (mode == "theta") {
    const torus::Scene sc = read_scene(sec.child("scene"));
    const std::vector<IVec> ms = read_m_list(sec, sc.k);
    const double t_bound = sec.number("t_bound", 10.0);
    const auto k_bound = sec.integer("k_bound", 3);
    const double tol = sec.number("tol", 1e-3);
    const auto grid = sec.integer("grid", 256);
    if (grid < 1 || grid > 1'000'000) sec.fail("grid", "must lie in 1..1e6");
    if (k_bound < 0 || k_bound > 50) sec.fail("k_bound", "must lie in 0..50");
    sec.finish();
    const auto reports = parallel_map(ms.size(), par, [&](std::size_t i) {
      return funcspec::theta_genericity_scan(sc.theta, sc.f, sc.phi, sc.U, ms[i], t_bound,
                                             static_cast<int>(k_bound), tol, static_cast<int>(grid));
    });
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const funcspec::GenericityReport& r = reports[i];
      json w = json::array();
      for (std::size_t h = 0; h < r.witnesses.size() && h < 10; ++h)
        w.push_back({{"s", to_std(r.witnesses[h].s)}, {"t", r.witnesses[h].t},
                     {"k", to_std(r.witnesses[h].k)}, {"distance", r.witnesses[h].distance}});
      out["reports"].push_back({{"m", to_std(ms[i])},
                                {"grid_points", r.grid_points},
                                {"flagged", r.flagged},
                                {"flagged_fraction", r.flagged_fraction},
                                {"witnesses", w}});
    }
  } else {
    sec.fail("mode", "expected \"bad_m\" or \"theta\"");
  }
  out["m_count"] = out["reports"].size();
  const RunInfo info = finish_info("genericity-check", root, ctx);
  emit(ctx, info, "genericity.json", dump(out));
  return 0;
}

int contraction_test(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  const groups::FlowParams p = read_flow(sec);
  const auto k = sec.integer("k", 1);
  if (k < 1 || k > 4) sec.fail("k", "must lie in 1..4");
  const funcspec::FuncFamily phi = read_phi(sec, p, static_cast<int>(k));
  const funcspec::ParamBox I = read_box(sec.child("I"));
  if (I.dim() != p.horo_dim()) sec.fail("I", "must have r (d - r) coordinates");
  const IVec mv = sec.integers("m", IVec::Ones(k));
  if (mv.size() != k || mv.isZero()) sec.fail("m", "expected a nonzero vector of length k");
  const heights::MIndex m(mv);
  const double nu = sec.number("nu", lattice::default_nu(p.r, p.d));
  const double eps = sec.number("eps", lattice::kDefaultEps);
  const heights::M1Result m1 = heights::m1_constant(phi, I, p);
  const double sigma = heights::sigma_estimate(phi, I, m, p, m1.m1);
  const double t_step = sec.number("t_step", heights::default_t_step(p, sigma));
  const auto quad = sec.integer("quad", 16);
  if (quad < 1 || quad > 4096) sec.fail("quad", "must lie in 1..4096");
  const auto pilot_n = sec.integer("pilot", 10);
  const auto n_max = sec.integer("n_max", 6);
  if (pilot_n < 1 || n_max < 1) sec.fail("pilot", "pilot and n_max must be positive");

  ergodic::ContractionContext cc{phi, I, m, heights::MixedHeightParams(p, nu, eps, t_step),
                                 static_cast<int>(quad)};
  std::vector<std::pair<int, funcspec::ParamBox>> boxes;
  if (sec.has("J")) {
    std::vector<Section> js = sec.children("J");
    if (js.empty()) sec.fail("J", "explicit box list must not be empty");
    for (Section& j : js) {
      const auto n = j.integer("n");
      const Vec lo = read_point(j, "lo", Vec(), I.dim());
      const Vec hi = read_point(j, "hi", Vec(), I.dim());
      j.finish();
      boxes.push_back({static_cast<int>(n), funcspec::ParamBox{lo, hi}});
      if (!ergodic::admissible(cc, boxes.back().first, boxes.back().second))
        j.fail("n", "box is not admissible for this n");
    }
  } else {
    const auto count = sec.integer("boxes", 50);
    if (count < 1 || count > 100'000) sec.fail("boxes", "must lie in 1..1e5");
    for (std::int64_t i = 0; i < count; ++i) {
      std::mt19937_64 rng = sample_stream(root.seed, (1ULL << 32) + static_cast<std::uint64_t>(i));
      boxes.push_back(ergodic::random_admissible_box(cc, rng, static_cast<int>(n_max)));
    }
  }
  sec.finish();

  const Parallelism par{ctx.workers};
  std::vector<std::pair<int, funcspec::ParamBox>> pilot{{0, I}};
  for (std::int64_t i = 1; i < pilot_n; ++i) {
    std::mt19937_64 rng = sample_stream(root.seed, static_cast<std::uint64_t>(i));
    pilot.push_back(ergodic::random_admissible_box(cc, rng, static_cast<int>(n_max)));
  }
  const double b = ergodic::calibrate_b(cc, pilot, par);

  std::vector<std::string> header{"index", "n"};
  for (int i = 1; i <= I.dim(); ++i) header.push_back("lo" + std::to_string(i));
  for (int i = 1; i <= I.dim(); ++i) header.push_back("hi" + std::to_string(i));
  for (const char* h : {"lhs", "rhs", "margin", "lhs_refined", "rhs_refined", "refinement_change"})
    header.push_back(h);
  Csv csv(header);
  double min_margin = INFINITY;
  double max_change = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& [n, J] = boxes[i];
    const ergodic::ContractionResult r = ergodic::contraction_check(cc, n, J, b, par);
    csv.field(static_cast<std::int64_t>(i)).field(static_cast<std::int64_t>(n));
    for (int a = 0; a < I.dim(); ++a) csv.field(J.lo(a));
    for (int a = 0; a < I.dim(); ++a) csv.field(J.hi(a));
    csv.field(r.lhs).field(r.rhs).field(r.margin).field(r.lhs_refined).field(r.rhs_refined)
        .field(r.refinement_change);
    csv.end_row();
    min_margin = std::min(min_margin, r.margin);
    max_change = std::max(max_change, r.refinement_change);
  }
  json summary = {{"b", b},
                  {"t_step", t_step},
                  {"sigma_grid_estimate", sigma},
                  {"M1", m1.m1},
                  {"boxes", boxes.size()},
                  {"pilot_boxes", pilot.size()},
                  {"min_margin", min_margin},
                  {"all_margins_nonnegative", min_margin >= 0.0},
                  {"max_refinement_change", max_change}};
  const RunInfo info = finish_info("contraction-test", root, ctx);
  emit(ctx, info, "contraction.csv", csv.text());
  emit(ctx, info, "contraction_summary.json", dump(summary));
  return 0;
}

int correlation(const json& cfg, const Context& ctx) {
  Root root(cfg, ctx.seed);
  Section& sec = root.section;
  const groups::FlowParams p = read_flow(sec);
  const auto k = sec.integer("k", 1);
  if (k < 1 || k > 4) sec.fail("k", "must lie in 1..4");
  const funcspec::FuncFamily phi = read_phi(sec, p, static_cast<int>(k));
  const funcspec::ParamBox I = read_box(sec.child("I"));
  if (I.dim() != p.horo_dim()) sec.fail("I", "must have r (d - r) coordinates");
  const ergodic::Observable psi = read_observable(sec.child_or_empty("observable"), p);
  const double t = sec.number("t", 2.0);
  const std::vector<double> gaps = sec.numbers("gaps", {0.0, 1.0, 2.0, 3.0, 4.0});
  if (gaps.empty()) sec.fail("gaps", "need at least one gap");
  const auto samples = sec.integer("samples", 10'000);
  if (samples < 2 || samples > 100'000'000) sec.fail("samples", "must lie in 2..1e8");
  const double s_prime = sec.number("s_prime", 1.0);
  sec.finish();

  const Parallelism par{ctx.workers};
  Csv csv({"gap", "t", "l", "value", "std_error", "ratio_to_first"});
  double first = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double l = t + gaps[i];
    const ergodic::Estimate e = ergodic::correlation_estimate(
        phi, p, I, psi, t, l, static_cast<std::size_t>(samples), root.seed, s_prime, par);
    if (i == 0) first = std::abs(e.value);
    csv.field(gaps[i]).field(t).field(l).field(e.value).field(e.std_error)
        .field(first > 0.0 ? std::abs(e.value) / first : 0.0);
    csv.end_row();
  }
  const RunInfo info = finish_info("correlation", root, ctx);
  emit(ctx, info, "correlation.csv", csv.text());
  return 0;
}

}  // namespace latgeo::cli
