#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "latgeo/funcspec.hpp"
#include "latgeo/groups.hpp"
#include "latgeo/heights.hpp"
#include "latgeo/orbit.hpp"
#include "latgeo/parallel.hpp"

namespace latgeo::ergodic {

using groups::FlowParams;
using groups::GroupElement;
using heights::MIndex;
using heights::MixedHeightParams;

enum class FlowKind { AT, D };

struct TrajectorySpec {
  GroupElement base = GroupElement::identity(2, 1);
  FlowKind flow = FlowKind::AT;
  FlowParams params;  // D uses params.d only
  double T = 0.0;
  double dt = 1.0 / 64.0;
  /// Reduce modulo Gamma after every step. Without reduction the orbit is
  /// computed as g_t x directly, which only stays accurate for short horizons.
  bool reduce = true;

  /// Throws InputError unless 0 < dt <= T / 100.
  void validate() const;
};

/// Bounded test functions on X. The Siegel kinds sum a radial profile over
/// one affine grid g (Z^d + c_j) of the point.
class Observable {
 public:
  enum class Kind { Constant, Bump, SmoothBall, InvHeight, BetaLevel };

  static Observable constant(double value);
  /// exp(1 - 1 / (1 - r^2 / rho^2)) on r < rho, scaled by amplitude.
  static Observable bump(double rho, double amplitude = 1.0, int grid = 0);
  /// 1 on r <= radius, cosine ramp down to 0 at radius + width.
  static Observable smooth_ball(double radius, double width, int grid = 0);
  /// exp(-alpha~(g Z^d)).
  static Observable inv_height(double eps, double nu);
  /// 1 for beta_m <= level, 0 from 1.1 level on (and at infinity), linear between.
  static Observable beta_level(const MIndex& m, const MixedHeightParams& hp, double level);

  Kind kind() const { return kind_; }
  bool is_siegel() const { return kind_ == Kind::Bump || kind_ == Kind::SmoothBall; }
  double operator()(const GroupElement& x) const;
  /// Radial profile of the Siegel kinds.
  double profile(double r) const;
  double support_radius() const;
  /// 0, the points where the profile is not smooth, and the support radius.
  std::vector<double> profile_knots() const;
  /// Short parameter description for output metadata.
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  double a_ = 0.0;
  double b_ = 0.0;
  double amplitude_ = 1.0;
  int grid_ = 0;
  std::optional<MIndex> m_;
  std::optional<MixedHeightParams> hp_;
};

/// Lebesgue integral of a Siegel observable's profile over R^d by adaptive
/// Gauss-Kronrod quadrature; the mean of the observable over X.
double siegel_reference(const Observable& obs, int d);

struct BirkhoffResult {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> running_averages;
  double final = 0.0;
  double std_error = 0.0;  // batch means over 20 batches
  std::optional<double> reference;
  double dt = 0.0;
};

/// Trapezoid weights for n >= 2 equally spaced samples, normalized to sum 1.
std::vector<double> trapezoid_weights(std::size_t n);

/// Orbit points of the trajectory at times 0, dt, ..., T.
std::vector<orbit::ReducedPoint> trajectory(const TrajectorySpec& spec);
BirkhoffResult birkhoff_average(const TrajectorySpec& spec, const Observable& obs);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of int_I psi_t psi_l ds with
/// psi_t(w) = psi(a_t u_phi(w)) - psi(u(s' E_11) a_t u_phi(w)).
Estimate correlation_estimate(const funcspec::FuncFamily& phi, const FlowParams& p,
                              const funcspec::ParamBox& interval, const Observable& psi, double t,
                              double l, std::size_t n_samples, std::uint64_t seed,
                              double s_prime = 1.0, Parallelism par = {});

/// Fraction of sampled trajectory times with beta_m <= level.
double sublevel_fraction(const TrajectorySpec& spec, const MIndex& m, const MixedHeightParams& hp,
                         double level);

/// Data for the contraction inequality
///   int_J beta(a_{(n+1)t} u_phi(s)) ds <= 1/2 int_J beta(a_{nt} u_phi(s)) ds + b |J|.
struct ContractionContext {
  funcspec::FuncFamily phi;
  funcspec::ParamBox I;
  MIndex m;
  MixedHeightParams hp;
  int quad = 16;  // midpoint nodes per axis
};

struct ContractionResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double lhs_refined = 0.0;
  double rhs_refined = 0.0;
  /// max relative change of the two integrals under halving the node spacing.
  double refinement_change = 0.0;
};

/// J is admissible for n when J lies in I and, for n >= 1, every side is at
/// least e^{-d n t}; for n = 0 only J = I is admissible.
bool admissible(const ContractionContext& ctx, int n, const funcspec::ParamBox& J);
/// int_J beta_m(a_{nt} u_phi(s)) ds by the midpoint rule with q nodes per axis.
double beta_integral(const ContractionContext& ctx, int n, const funcspec::ParamBox& J, int q,
                     Parallelism par = {});
/// (lhs - rhs without b) / |J|: the b this box needs.
double contraction_deficit(const ContractionContext& ctx, int n, const funcspec::ParamBox& J,
                           Parallelism par = {});
/// Largest deficit over the pilot set (never negative).
double calibrate_b(const ContractionContext& ctx,
                   const std::vector<std::pair<int, funcspec::ParamBox>>& pilot,
                   Parallelism par = {});
ContractionResult contraction_check(const ContractionContext& ctx, int n,
                                    const funcspec::ParamBox& J, double b, Parallelism par = {});
/// Random admissible (n, J) with 1 <= n <= n_max; side lengths log-uniform
/// between max(e^{-d n t}, min_side) and the side of I.
std::pair<int, funcspec::ParamBox> random_admissible_box(const ContractionContext& ctx,
                                                         std::mt19937_64& rng, int n_max,
                                                         double min_side = 1e-6);

}  // namespace latgeo::ergodic
