#include "latgeo/heights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "latgeo/lattice.hpp"

namespace latgeo::heights {

namespace {

constexpr double kTie = 1e-12;
constexpr double kSingular = 1e-14;

Vec vm_of(const GroupElement& x, const MIndex& m) {
  if (m.k() != x.k()) throw InputError("m has the wrong length for this element");
  return x.v * m.as_real();
}

Mat as_s_matrix(const FlowParams& p, const Vec& s) {
  if (s.size() != p.horo_dim()) throw InputError("parameter has the wrong dimension");
  Mat out(p.r, p.cols());
  for (int i = 0; i < p.r; ++i) {
    for (int j = 0; j < p.cols(); ++j) out(i, j) = s(i * p.cols() + j);
  }
  return out;
}

struct Residual {
  double value = std::numeric_limits<double>::infinity();
  IVec a;
  IVec b;
};

// min over |a|_inf <= amax of |(phi(s))_{<=r} m - s a - b|_inf with the
// optimal b obtained componentwise by rounding.
Residual min_residual(const FuncFamily& phi, const FlowParams& p, const MIndex& m, const Vec& s,
                      std::int64_t amax) {
  const Mat S = as_s_matrix(p, s);
  const Vec target = (phi.evaluate(s) * m.as_real()).head(p.r);
  const int na = p.cols();
  Residual best;
  IVec a = IVec::Constant(na, -amax);
  Vec val(p.r);
  IVec b(p.r);
  while (true) {
    val = target - S * a.cast<double>();
    double res = 0.0;
    for (int i = 0; i < p.r; ++i) {
      const double bi = std::round(val(i));
      b(i) = static_cast<std::int64_t>(bi);
      res = std::max(res, std::abs(val(i) - bi));
    }
    if (res < best.value) {
      best.value = res;
      best.a = a;
      best.b = b;
    }
    int pos = 0;
    while (pos < na && a(pos) == amax) {
      a(pos) = -amax;
      ++pos;
    }
    if (pos == na) break;
    ++a(pos);
  }
  return best;
}

void check_phi_shape(const FuncFamily& phi, const FlowParams& p) {
  if (phi.rows() != p.d) throw InputError("phi must have d rows");
  if (phi.inputs() != p.horo_dim()) throw InputError("phi must take r (d - r) inputs");
}

}  // namespace

MIndex::MIndex(IVec m) : m_(std::move(m)) {
  if (m_.size() < 1) throw InputError("m must have at least one entry");
  if (m_.isZero()) throw InputError("m must be nonzero");
}

Extended::Extended(double v) : v_(v) {
  if (!std::isfinite(v)) throw NumericError("finite height expected; use Extended::infinity()");
}

Extended Extended::infinity() {
  Extended e;
  e.inf_ = true;
  return e;
}

double Extended::value() const {
  if (inf_) throw NumericError("height is infinite");
  return v_;
}

Extended operator+(Extended a, Extended b) {
  if (a.inf_ || b.inf_) return Extended::infinity();
  return Extended(a.v_ + b.v_);
}

bool operator==(Extended a, Extended b) {
  if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
  return a.v_ == b.v_;
}

std::partial_ordering operator<=>(Extended a, Extended b) {
  if (a.inf_ && b.inf_) return std::partial_ordering::equivalent;
  if (a.inf_) return std::partial_ordering::greater;
  if (b.inf_) return std::partial_ordering::less;
  return a.v_ <=> b.v_;
}

XiResult xi_candidate(const GroupElement& x, const MIndex& m) {
  const Vec u = vm_of(x, m);
  const Mat& g = x.g.matrix();
  const lattice::LatticeVector cvp = lattice::closest_vector(g, u);
  const double lambda1 = lattice::first_minimum(g);
  XiResult res;
  res.xi_m = cvp.coeffs;
  res.witness_norm = cvp.length;
  res.half_lambda1 = 0.5 * lambda1;
  const double gap = res.half_lambda1 - res.witness_norm;
  res.tie = std::abs(gap) <= kTie * std::max(1.0, lambda1);
  res.exists = gap > 0.0 && !res.tie;
  return res;
}

Extended alpha_m(const GroupElement& x, const MIndex& m) {
  const XiResult xi = xi_candidate(x, m);
  if (!xi.exists) return Extended(1.0);
  if (xi.witness_norm < kSingular) return Extended::infinity();
  return Extended(1.0 / xi.witness_norm);
}

bool in_X_m(const GroupElement& x, const MIndex& m, double tol) {
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  const Vec c = x.g.matrix().partialPivLu().solve(vm_of(x, m));
  Vec frac(c.size());
  for (int i = 0; i < c.size(); ++i) frac(i) = c(i) - std::round(c(i));
  return frac.norm() <= tol;
}

MixedHeightParams::MixedHeightParams(FlowParams p, double nu, double eps, double t_step)
    : p_(p), nu_(nu), eps_(eps), t_(t_step) {
  const double q = static_cast<double>(p.r * (p.d - p.r));
  if (!(nu > 0.0 && nu < 1.0 / q)) throw InputError("nu must lie in (0, 1/(r(d-r)))");
  if (!(eps > 0.0 && eps <= 0.1)) throw InputError("eps must lie in (0, 0.1]");
  if (!(t_step > 0.0) || !std::isfinite(t_step)) throw InputError("t_step must be positive");
  c_ = 4.0 * std::pow(10.0 * p.r * p.r * p.d, nu) * std::pow(2.0, q);
}

MixedHeightParams MixedHeightParams::defaults(FlowParams p, double t_step) {
  return MixedHeightParams(p, lattice::default_nu(p.r, p.d), lattice::kDefaultEps, t_step);
}

Extended beta_m(const GroupElement& x, const MIndex& m, const MixedHeightParams& hp) {
  const Extended am = alpha_m(x, m);
  if (am.is_infinite()) return am;
  const FlowParams& p = hp.flow();
  if (x.dim() != p.d) throw InputError("element dimension does not match the height parameters");
  const double tilde =
      lattice::margulis_alpha_tilde(lattice::UnimodularLattice(x.g.matrix()), hp.eps(), hp.nu());
  return Extended(std::pow(am.value(), hp.nu()) +
                  hp.c() * std::exp(hp.nu() * p.r * hp.t_step()) * tilde);
}

double mu_d(int d) {
  if (d < 1) throw InputError("mu_d needs d >= 1");
  return 1.0 / std::sqrt(static_cast<double>(d));
}

M1Result m1_constant(const FuncFamily& phi, const ParamBox& U, const FlowParams& p, int grid,
                     double h) {
  check_phi_shape(phi, p);
  if (U.dim() != p.horo_dim()) throw InputError("U has the wrong dimension");
  M1Result out;
  out.grid = grid;
  out.n1 = 8.0 * p.r * p.r * std::sqrt(static_cast<double>(phi.cols())) * p.cols();
  const std::size_t n = funcspec::grid_size(U, grid);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const Vec s = funcspec::grid_point(U, grid, idx);
    const Eigen::MatrixXd jac =
        funcspec::fd_jacobian(phi, std::span<const double>(s.data(), s.size()), h);
    const double sup = jac.cwiseAbs().maxCoeff();
    if (!std::isfinite(sup)) throw InputError("phi has non-finite derivatives on U");
    out.sup_partial = std::max(out.sup_partial, sup);
  }
  out.m1 = out.n1 * out.sup_partial + 1.0;
  return out;
}

BadMReport bad_m_scan(const FuncFamily& phi, const ParamBox& U, const MIndex& m,
                      const FlowParams& p, double tol, int grid) {
  check_phi_shape(phi, p);
  if (!(tol > 0.0)) throw InputError("tolerance must be positive");
  if (m.k() != phi.cols()) throw InputError("m has the wrong length for phi");
  BadMReport rep;
  rep.m1 = m1_constant(phi, U, p);
  const double scale = rep.m1.m1 * m.norm();
  for (int i = 0; i < U.dim(); ++i) {
    const double step = (U.hi(i) - U.lo(i)) / grid;
    if (!(step < tol / (1.0 + scale))) {
      throw InputError("grid too coarse: step must be below tol / (1 + M_1 |m|)");
    }
  }
  const auto amax = static_cast<std::int64_t>(std::floor(scale));
  rep.grid_points = funcspec::grid_size(U, grid);
  for (std::size_t idx = 0; idx < rep.grid_points; ++idx) {
    const Vec s = funcspec::grid_point(U, grid, idx);
    const Residual r = min_residual(phi, p, m, s, amax);
    if (r.value < tol) rep.flagged.push_back({s, r.a, r.b, r.value});
  }
  rep.flagged_fraction =
      static_cast<double>(rep.flagged.size()) / static_cast<double>(rep.grid_points);
  return rep;
}

double sigma_estimate(const FuncFamily& phi, const ParamBox& I, const MIndex& m,
                      const FlowParams& p, double m1, int grid) {
  check_phi_shape(phi, p);
  const auto amax = static_cast<std::int64_t>(std::floor(m1 * m.norm()));
  double sigma = std::numeric_limits<double>::infinity();
  const std::size_t n = funcspec::grid_size(I, grid);
  for (std::size_t idx = 0; idx < n; ++idx) {
    sigma = std::min(sigma, min_residual(phi, p, m, funcspec::grid_point(I, grid, idx), amax).value);
  }
  return sigma;
}

double default_t_step(const FlowParams& p, double sigma) {
  if (!(sigma > 0.0)) throw InputError("sigma must be positive");
  const double from_sigma = std::log(2.0 / (mu_d(p.d) * sigma)) + 1.0;
  const double from_dim = std::log(2.0 * p.d) / static_cast<double>(p.d - p.r) + 0.01;
  return std::max(from_sigma, from_dim);
}

Vec w_vector(int n, const Mat& s, const Mat& v, const MIndex& m, const FuncFamily& phi,
             const MixedHeightParams& hp) {
  const FlowParams& p = hp.flow();
  check_phi_shape(phi, p);
  if (n < 0) throw InputError("n must be non-negative");
  if (s.rows() != p.r || s.cols() != p.cols()) throw InputError("s must be r x (d - r)");
  if (v.rows() != p.d || v.cols() != m.k()) throw InputError("v must be d x k");
  Vec flat(p.horo_dim());
  for (int i = 0; i < p.r; ++i) {
    for (int j = 0; j < p.cols(); ++j) flat(i * p.cols() + j) = s(i, j);
  }
  const Mat ph = phi.evaluate(flat);
  if (groups::sup_norm(ph.bottomRows(p.cols())) > 1e-12) {
    throw InputError("w_vector requires (phi(s))_{>r} = 0");
  }
  const Vec diff = (ph - v) * m.as_real();
  const double nt = n * hp.t_step();
  Vec w(p.d);
  w.head(p.r) = std::exp(p.cols() * nt) * (diff.head(p.r) + s * diff.tail(p.cols()));
  w.tail(p.cols()) = std::exp(-p.r * nt) * diff.tail(p.cols());
  return w;
}

Eigen::MatrixXd partition_rotation(int N, const std::vector<int>& I1, const std::vector<int>& I2,
                                   const std::vector<int>& I3) {
  if (N < 1) throw InputError("N must be positive");
  if (I1.empty()) throw InputError("I1 must be nonempty");
  std::vector<int> all;
  all.insert(all.end(), I1.begin(), I1.end());
  all.insert(all.end(), I2.begin(), I2.end());
  all.insert(all.end(), I3.begin(), I3.end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != N) throw InputError("index sets do not partition 0..N-1");
  for (int i = 0; i < N; ++i) {
    if (all[i] != i) throw InputError("index sets do not partition 0..N-1");
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(N, N);
  if (I3.empty()) return B;

  std::vector<int> idx{*std::min_element(I1.begin(), I1.end())};
  std::vector<int> rest = I3;
  std::sort(rest.begin(), rest.end());
  idx.insert(idx.end(), rest.begin(), rest.end());
  const int p = static_cast<int>(idx.size());

  // Householder reflection taking e_1 to the constant unit vector; flipping
  // the last column restores det = +1 without touching the first.
  Eigen::VectorXd w = -Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  w(0) += 1.0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(p, p) - 2.0 * w * w.transpose() / w.squaredNorm();
  H.col(p - 1) *= -1.0;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) B(idx[a], idx[b]) = H(a, b);
  }
  return B;
}

}  // namespace latgeo::heights
