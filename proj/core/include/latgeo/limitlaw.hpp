#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latgeo/lattice.hpp"
#include "latgeo/parallel.hpp"
#include "latgeo/torus.hpp"

namespace latgeo::limitlaw {

/// One experiment on the distribution of normalized hitting times.
///   joint_T:  T_1..T_N for P(tau_n <= T_n for all n)
///   cdf_grid: grid on which the CDF of tau_{cdf_order} is estimated
///   moment_T: window of the first-moment statistic #{tau_n <= moment_T}
struct LimitLawSpec {
  torus::Scene scene;
  Vec s;
  std::vector<double> joint_T{1.0};
  std::vector<double> cdf_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  int cdf_order = 1;
  double moment_T = 5.0;
  double L = 8.0;
  double dl = 1.0 / 32.0;
  double l_fixed = 3.0;
  int s_grid = 32;  // points per axis of U
  std::size_t samples = 10'000;
  std::uint64_t seed = 1;
  std::int64_t screen_height = 10'000;

  /// Throws InputError on empty or non-positive T lists and bad step sizes.
  void validate() const;
};

struct DistEstimate {
  std::string method;
  std::vector<double> joint_T;
  double joint_prob = 0.0;
  double joint_se = 0.0;
  std::vector<double> cdf_grid;
  std::vector<double> marginals;  // P(tau_{cdf_order} <= cdf_grid[i])
  std::vector<double> std_error;
  double mean_count = 0.0;        // E #{tau_n <= moment_T}
  double mean_count_se = 0.0;
  std::size_t samples = 0;
  std::size_t rejected = 0;       // s-grid points removed by screening
};

/// Statistics of one realization: normalized times (or counts) reduced to
/// the indicators the estimators average.
struct Realization {
  bool joint = false;
  std::vector<double> cdf;  // 0/1 per grid point
  double count = 0.0;
};

/// Reduces a sorted list of normalized hitting times.
Realization summarize(const std::vector<double>& tau, const LimitLawSpec& spec);

/// Average over the l-grid of [0, L] at the fixed s. Throws InputError when
/// f(s) has a rational relation below the screening height.
DistEstimate empirical_birkhoff_cdf(const LimitLawSpec& spec, Parallelism par = {});

/// Sum over j of the points of g'(Z^d + w_j) in (0, T) x (-tilde_Omega_j(s)).
std::int64_t count_hits_random_grid(const lattice::UnimodularLattice& gprime, const Mat& w,
                                    const torus::Scene& scene, const Vec& s, double T);

/// Haar Monte Carlo over random affine lattices; d = 2 only (UnsupportedError
/// otherwise). Deterministic per seed.
DistEstimate estimate_limit_cdf_mc(const LimitLawSpec& spec, Parallelism par = {});

/// Average over the cell-centred s-grid of U at l = l_fixed, skipping points
/// where f(s) has a rational relation.
DistEstimate estimate_limit_cdf_s_average(const LimitLawSpec& spec, Parallelism par = {});

/// Max absolute difference of the marginal CDFs; InputError on grid mismatch.
double ks_distance(const DistEstimate& a, const DistEstimate& b);

}  // namespace latgeo::limitlaw
