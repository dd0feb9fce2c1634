#include "latgeo/limitlaw.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "latgeo/random.hpp"

namespace latgeo::limitlaw {

namespace {

double max_window(const LimitLawSpec& spec) {
  double m = spec.moment_T;
  for (double t : spec.joint_T) m = std::max(m, t);
  for (double t : spec.cdf_grid) m = std::max(m, t);
  return m;
}

double mean_of(const std::vector<double>& v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

// Standard error of the mean of independent samples.
double iid_se(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double mu = mean_of(v);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1) / static_cast<double>(n));
}

// Standard error from 16 contiguous batch means, for serially correlated
// sequences such as neighbouring l values.
double batch_se(const std::vector<double>& v) {
  constexpr std::size_t kBatches = 16;
  if (v.size() < 2 * kBatches) return iid_se(v);
  const std::size_t per = v.size() / kBatches;
  std::vector<double> means(kBatches);
  for (std::size_t b = 0; b < kBatches; ++b) {
    std::vector<double> chunk(v.begin() + static_cast<std::ptrdiff_t>(b * per),
                              v.begin() + static_cast<std::ptrdiff_t>((b + 1) * per));
    means[b] = mean_of(chunk);
  }
  return iid_se(means);
}

DistEstimate aggregate(const std::string& method, const LimitLawSpec& spec,
                       const std::vector<Realization>& rs, bool correlated) {
  if (rs.empty()) throw InputError(method + ": no admissible samples");
  auto se = correlated ? batch_se : iid_se;
  DistEstimate out;
  out.method = method;
  out.joint_T = spec.joint_T;
  out.cdf_grid = spec.cdf_grid;
  out.samples = rs.size();

  std::vector<double> col(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) col[i] = rs[i].joint ? 1.0 : 0.0;
  out.joint_prob = mean_of(col);
  out.joint_se = se(col);
  for (std::size_t g = 0; g < spec.cdf_grid.size(); ++g) {
    for (std::size_t i = 0; i < rs.size(); ++i) col[i] = rs[i].cdf[g];
    out.marginals.push_back(mean_of(col));
    out.std_error.push_back(se(col));
  }
  for (std::size_t i = 0; i < rs.size(); ++i) col[i] = rs[i].count;
  out.mean_count = mean_of(col);
  out.mean_count_se = se(col);
  return out;
}

Realization realize(const torus::Scene& scene, const Vec& s, double l, const LimitLawSpec& spec) {
  const double sigma = torus::mean_return_sigma(scene, s);
  const double t_max = (max_window(spec) + 1.0) * std::exp((scene.d - 1) * l) * sigma;
  const torus::HitSeries hs = torus::hit_times(scene, s, l, t_max);
  return summarize(torus::normalized_times(hs, scene, s, l), spec);
}

bool screened_out(const torus::Scene& scene, const Vec& s, std::int64_t H) {
  const torus::SceneAt at = torus::evaluate(scene, s);
  return torus::rational_relation_witness(at.f, H).has_value();
}

}  // namespace

void LimitLawSpec::validate() const {
  scene.validate();
  if (s.size() != scene.U.dim()) throw InputError("s has the wrong dimension");
  if (joint_T.empty()) throw InputError("joint_T needs N >= 1 entries");
  if (cdf_grid.empty()) throw InputError("cdf_grid must not be empty");
  for (double t : joint_T)
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("T_n must be positive");
  for (double t : cdf_grid)
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("cdf grid values must be positive");
  if (!(moment_T > 0.0)) throw InputError("moment_T must be positive");
  if (cdf_order < 1) throw InputError("cdf_order must be at least 1");
  if (!(L > 0.0) || !(dl > 0.0) || dl > L) throw InputError("need 0 < dl <= L");
  if (s_grid < 1) throw InputError("s_grid must be positive");
  if (samples < 1) throw InputError("samples must be positive");
  if (screen_height < 1 || screen_height > 1'000'000)
    throw InputError("screen_height must lie in 1..1e6");
}

Realization summarize(const std::vector<double>& tau, const LimitLawSpec& spec) {
  Realization r;
  r.joint = true;
  for (std::size_t n = 0; n < spec.joint_T.size(); ++n)
    if (n >= tau.size() || tau[n] > spec.joint_T[n]) r.joint = false;
  const auto order = static_cast<std::size_t>(spec.cdf_order);
  for (double T : spec.cdf_grid)
    r.cdf.push_back(tau.size() >= order && tau[order - 1] <= T ? 1.0 : 0.0);
  r.count = static_cast<double>(std::upper_bound(tau.begin(), tau.end(), spec.moment_T) - tau.begin());
  return r;
}

DistEstimate empirical_birkhoff_cdf(const LimitLawSpec& spec, Parallelism par) {
  spec.validate();
  if (screened_out(spec.scene, spec.s, spec.screen_height))
    throw InputError("f(s) has a rational relation below the screening height");
  const auto n = static_cast<std::size_t>(std::floor(spec.L / spec.dl + 1e-9));
  const auto rs = parallel_map(n, par, [&](std::size_t i) {
    return realize(spec.scene, spec.s, static_cast<double>(i) * spec.dl, spec);
  });
  return aggregate("birkhoff_l", spec, rs, true);
}

std::int64_t count_hits_random_grid(const lattice::UnimodularLattice& gprime, const Mat& w,
                                    const torus::Scene& scene, const Vec& s, double T) {
  if (w.rows() != scene.d || w.cols() != scene.k) throw InputError("offsets must be d x k");
  if (gprime.dim() != scene.d) throw InputError("lattice dimension mismatch");
  const lattice::AffineGrid grid = lattice::AffineGrid::from_coordinates(gprime, w);
  std::int64_t total = 0;
  for (int j = 0; j < scene.k; ++j) {
    const lattice::CylinderRegion region{T, torus::tilde_Omega(scene, s, j)};
    total += lattice::count_points_in_region(grid, j, region);
  }
  return total;
}

DistEstimate estimate_limit_cdf_mc(const LimitLawSpec& spec, Parallelism par) {
  spec.validate();
  if (spec.scene.d != 2) throw UnsupportedError("Haar Monte Carlo is implemented for d = 2 only");
  const int d = spec.scene.d;
  const int k = spec.scene.k;
  const auto rs = parallel_map(spec.samples, par, [&](std::size_t i) {
    std::mt19937_64 rng = sample_stream(spec.seed, i);
    const lattice::UnimodularLattice lat = lattice::sample_haar_sl2(rng);
    Mat w(d, k);
    for (int j = 0; j < k; ++j)
      for (int r = 0; r < d; ++r) w(r, j) = uniform01(rng);
    auto count = [&](double T) { return count_hits_random_grid(lat, w, spec.scene, spec.s, T); };
    // tau_n <= T exactly when at least n points lie in the window (0, T).
    Realization r;
    r.joint = true;
    for (std::size_t n = 0; n < spec.joint_T.size(); ++n)
      if (count(spec.joint_T[n]) < static_cast<std::int64_t>(n + 1)) r.joint = false;
    for (double T : spec.cdf_grid) r.cdf.push_back(count(T) >= spec.cdf_order ? 1.0 : 0.0);
    r.count = static_cast<double>(count(spec.moment_T));
    return r;
  });
  return aggregate("haar_mc", spec, rs, false);
}

DistEstimate estimate_limit_cdf_s_average(const LimitLawSpec& spec, Parallelism par) {
  spec.validate();
  if (spec.l_fixed < 2.0) throw InputError("l_fixed must be at least 2");
  const std::size_t n = funcspec::grid_size(spec.scene.U, spec.s_grid);
  struct Slot {
    bool kept = false;
    Realization r;
  };
  const auto slots = parallel_map(n, par, [&](std::size_t i) {
    const Vec s = funcspec::grid_point(spec.scene.U, spec.s_grid, i);
    Slot slot;
    if (screened_out(spec.scene, s, spec.screen_height)) return slot;
    slot.kept = true;
    slot.r = realize(spec.scene, s, spec.l_fixed, spec);
    return slot;
  });
  std::vector<Realization> rs;
  for (const Slot& sl : slots)
    if (sl.kept) rs.push_back(sl.r);
  DistEstimate out = aggregate("s_average", spec, rs, false);
  out.rejected = n - rs.size();
  return out;
}

double ks_distance(const DistEstimate& a, const DistEstimate& b) {
  if (a.cdf_grid != b.cdf_grid || a.marginals.size() != b.marginals.size())
    throw InputError("estimates use different T grids");
  double m = 0.0;
  for (std::size_t i = 0; i < a.marginals.size(); ++i)
    m = std::max(m, std::abs(a.marginals[i] - b.marginals[i]));
  return m;
}

}  // namespace latgeo::limitlaw
