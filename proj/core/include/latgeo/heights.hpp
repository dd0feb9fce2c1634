#pragma once

#include <compare>
#include <vector>

#include "latgeo/funcspec.hpp"
#include "latgeo/groups.hpp"
#include "latgeo/types.hpp"

namespace latgeo::heights {

using funcspec::FuncFamily;
using funcspec::ParamBox;
using groups::FlowParams;
using groups::GroupElement;

/// Nonzero m in Z^k.
class MIndex {
 public:
  explicit MIndex(IVec m);
  const IVec& value() const { return m_; }
  int k() const { return static_cast<int>(m_.size()); }
  Vec as_real() const { return m_.cast<double>(); }
  double norm() const { return as_real().norm(); }

 private:
  IVec m_;
};

/// Non-negative real or the distinguished infinity flag. Infinity compares
/// above every finite value and absorbs sums.
class Extended {
 public:
  Extended() = default;
  Extended(double v);  // NOLINT: finite values convert implicitly
  static Extended infinity();

  bool is_infinite() const { return inf_; }
  /// Throws NumericError for the infinity flag.
  double value() const;

  friend Extended operator+(Extended a, Extended b);
  friend bool operator==(Extended a, Extended b);
  friend std::partial_ordering operator<=>(Extended a, Extended b);

 private:
  double v_ = 0.0;
  bool inf_ = false;
};

struct XiResult {
  bool exists = false;
  IVec xi_m;                   // coefficients with g * xi_m the closest point
  double witness_norm = 0.0;   // |v m - g xi_m|
  double half_lambda1 = 0.0;
  bool tie = false;            // within 1e-12 of the strict bound; classified absent
};

XiResult xi_candidate(const GroupElement& x, const MIndex& m);
/// 1 / witness when xi exists (infinity below 1e-14), else 1.
Extended alpha_m(const GroupElement& x, const MIndex& m);
/// dist(g^{-1} v m, Z^d) <= tol.
bool in_X_m(const GroupElement& x, const MIndex& m, double tol);

/// Height parameters. c is derived from (r, d, nu) and cannot be set.
class MixedHeightParams {
 public:
  MixedHeightParams(FlowParams p, double nu, double eps, double t_step);
  static MixedHeightParams defaults(FlowParams p, double t_step);

  const FlowParams& flow() const { return p_; }
  double nu() const { return nu_; }
  double eps() const { return eps_; }
  double t_step() const { return t_; }
  double c() const { return c_; }

 private:
  FlowParams p_;
  double nu_;
  double eps_;
  double t_;
  double c_;
};

/// alpha_m^nu + c e^{nu r t} alpha~(g Z^d).
Extended beta_m(const GroupElement& x, const MIndex& m, const MixedHeightParams& hp);

/// mu_d = 1 / sqrt(d): whenever xi exists, alpha_m > mu_d.
double mu_d(int d);

struct M1Result {
  double m1 = 1.0;
  double n1 = 0.0;
  double sup_partial = 0.0;
  int grid = 64;
};

/// M_1 = N_1 * sup |d phi / d s_ij|_inf + 1 with N_1 = 8 r^2 sqrt(k) (d - r).
M1Result m1_constant(const FuncFamily& phi, const ParamBox& U, const FlowParams& p, int grid = 64,
                     double h = 1e-5);

struct BadMHit {
  Vec s;
  IVec a;
  IVec b;
  double residual = 0.0;
};

struct BadMReport {
  std::size_t grid_points = 0;
  std::vector<BadMHit> flagged;
  double flagged_fraction = 0.0;
  M1Result m1;
};

/// Flags grid points s of U with |(phi(s))_{<=r} m - s a - b|_inf < tol for
/// some integer a with |a|_inf <= M_1 |m| and integer b. The grid step must
/// be below tol / (1 + M_1 |m|).
BadMReport bad_m_scan(const FuncFamily& phi, const ParamBox& U, const MIndex& m,
                      const FlowParams& p, double tol, int grid);

/// inf over the grid of I of the same residual; a grid stand-in for sigma.
double sigma_estimate(const FuncFamily& phi, const ParamBox& I, const MIndex& m,
                      const FlowParams& p, double m1, int grid = 64);

/// max(log(2 / (mu_d sigma)) + 1, log(2d) / (d - r) + 0.01).
double default_t_step(const FlowParams& p, double sigma);

/// (v_n(s) - g_n(s) v) m with g_n = a_{nt} u(s) and v_n = g_n phi(s).
/// Requires (phi(s))_{>r} = 0.
Vec w_vector(int n, const Mat& s, const Mat& v, const MIndex& m, const FuncFamily& phi,
             const MixedHeightParams& hp);

/// Rotation in SO_N whose first column on {i0} u I3 is constant 1/sqrt(p),
/// p = |I3| + 1, i0 = min I1; identity off those indices. 0-based indices.
Eigen::MatrixXd partition_rotation(int N, const std::vector<int>& I1, const std::vector<int>& I2,
                                   const std::vector<int>& I3);

}  // namespace latgeo::heights
