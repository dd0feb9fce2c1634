#include "latgeo/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "latgeo/lattice.hpp"
#include "latgeo/random.hpp"

namespace latgeo::ergodic {

namespace {

constexpr int kBatches = 20;

Mat to_s(const FlowParams& p, const Vec& flat) {
  Mat s(p.r, p.cols());
  for (int i = 0; i < p.r; ++i) {
    for (int j = 0; j < p.cols(); ++j) s(i, j) = flat(i * p.cols() + j);
  }
  return s;
}

groups::SLMatrix step_matrix(const TrajectorySpec& spec, double dt) {
  return spec.flow == FlowKind::AT ? groups::a_t(spec.params, dt) : groups::D_l(spec.params.d, dt);
}

IMat integer_inverse(const IMat& u) {
  const Mat inv = u.cast<double>().inverse();
  IMat out(inv.rows(), inv.cols());
  for (int i = 0; i < inv.rows(); ++i) {
    for (int j = 0; j < inv.cols(); ++j) out(i, j) = std::llround(inv(i, j));
  }
  if (out * u != IMat::Identity(u.rows(), u.cols())) throw NumericError("transform is not unimodular");
  return out;
}

// h x Gamma from a reduced x: the basis is multiplied, re-reduced, and the
// lattice coordinates transformed by the exact integer inverse.
orbit::ReducedPoint advance(const orbit::ReducedPoint& x, const groups::SLMatrix& h) {
  const groups::SLMatrix moved = h * x.x.g;
  const lattice::LllResult red = lattice::lll_reduce(moved.matrix());
  IMat u = red.transform;
  if (u.cast<double>().determinant() < 0.0) u.col(u.cols() - 1) *= -1;
  const groups::SLMatrix g = moved * groups::SLMatrix(u.cast<double>());
  Mat c = integer_inverse(u).cast<double>() * x.coords;
  for (int i = 0; i < c.rows(); ++i) {
    for (int j = 0; j < c.cols(); ++j) {
      c(i, j) -= std::floor(c(i, j));
      if (c(i, j) >= 1.0) c(i, j) = 0.0;
    }
  }
  Mat v = g.matrix() * c;
  return orbit::ReducedPoint{GroupElement(g, std::move(v)), std::move(c), false};
}

double batch_stderr(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2 * kBatches) return 0.0;
  std::vector<double> means(kBatches, 0.0);
  for (int b = 0; b < kBatches; ++b) {
    const std::size_t lo = n * b / kBatches;
    const std::size_t hi = n * (b + 1) / kBatches;
    means[b] = pairwise_sum(std::span<const double>(values.data() + lo, hi - lo)) /
               static_cast<double>(hi - lo);
  }
  const double mean = pairwise_sum(means) / kBatches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (kBatches - 1);
  return std::sqrt(var / kBatches);
}

}  // namespace

void TrajectorySpec::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw InputError("horizon T must be positive");
  if (!(dt > 0.0) || dt > T / 100.0 * (1.0 + 1e-12)) throw InputError("dt must lie in (0, T/100]");
  if (base.dim() != params.d) throw InputError("base point dimension does not match the flow");
}

Observable Observable::constant(double value) {
  Observable o;
  o.kind_ = Kind::Constant;
  o.a_ = value;
  return o;
}

Observable Observable::bump(double rho, double amplitude, int grid) {
  if (!(rho > 0.0)) throw InputError("bump radius must be positive");
  Observable o;
  o.kind_ = Kind::Bump;
  o.a_ = rho;
  o.amplitude_ = amplitude;
  o.grid_ = grid;
  return o;
}

Observable Observable::smooth_ball(double radius, double width, int grid) {
  if (!(radius >= 0.0) || !(width > 0.0)) throw InputError("smoothed ball needs radius >= 0, width > 0");
  Observable o;
  o.kind_ = Kind::SmoothBall;
  o.a_ = radius;
  o.b_ = width;
  o.grid_ = grid;
  return o;
}

Observable Observable::inv_height(double eps, double nu) {
  Observable o;
  o.kind_ = Kind::InvHeight;
  o.a_ = eps;
  o.b_ = nu;
  return o;
}

Observable Observable::beta_level(const MIndex& m, const MixedHeightParams& hp, double level) {
  if (!(level > 0.0)) throw InputError("level must be positive");
  Observable o;
  o.kind_ = Kind::BetaLevel;
  o.a_ = level;
  o.m_ = m;
  o.hp_ = hp;
  return o;
}

double Observable::profile(double r) const {
  switch (kind_) {
    case Kind::Bump: {
      const double q = r * r / (a_ * a_);
      if (q >= 1.0) return 0.0;
      return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - q));
    }
    case Kind::SmoothBall:
      if (r <= a_) return 1.0;
      if (r >= a_ + b_) return 0.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * (r - a_) / b_));
    default: throw InputError("observable has no radial profile");
  }
}

std::vector<double> Observable::profile_knots() const {
  if (kind_ == Kind::SmoothBall && a_ > 0.0) return {0.0, a_, a_ + b_};
  return {0.0, support_radius()};
}

double Observable::support_radius() const {
  switch (kind_) {
    case Kind::Bump: return a_;
    case Kind::SmoothBall: return a_ + b_;
    default: return 0.0;
  }
}

double Observable::operator()(const GroupElement& x) const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Bump:
    case Kind::SmoothBall: {
      if (grid_ < 0 || grid_ >= x.k()) throw InputError("observable grid index out of range");
      double sum = 0.0;
      lattice::for_each_point_in_ball(
          x.g.matrix(), x.v.col(grid_), Vec::Zero(x.dim()), support_radius(),
          [&](const Vec& p, const Vec&) { sum += profile(p.norm()); });
      return sum;
    }
    case Kind::InvHeight:
      return std::exp(-lattice::margulis_alpha_tilde(lattice::UnimodularLattice(x.g.matrix()), a_, b_));
    case Kind::BetaLevel: {
      const heights::Extended beta = heights::beta_m(x, *m_, *hp_);
      if (beta.is_infinite()) return 0.0;
      const double v = beta.value();
      if (v <= a_) return 1.0;
      if (v >= 1.1 * a_) return 0.0;
      return (1.1 * a_ - v) / (0.1 * a_);
    }
  }
  throw Error("unknown observable kind");
}

std::string Observable::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Constant: os << "constant(" << a_ << ")"; break;
    case Kind::Bump: os << "bump(rho=" << a_ << ",amplitude=" << amplitude_ << ",grid=" << grid_ << ")"; break;
    case Kind::SmoothBall: os << "smooth_ball(radius=" << a_ << ",width=" << b_ << ",grid=" << grid_ << ")"; break;
    case Kind::InvHeight: os << "inv_height(eps=" << a_ << ",nu=" << b_ << ")"; break;
    case Kind::BetaLevel: os << "beta_level(level=" << a_ << ")"; break;
  }
  return os.str();
}

double siegel_reference(const Observable& obs, int d) {
  if (!obs.is_siegel()) throw InputError("siegel_reference needs a Siegel observable");
  if (d < 1) throw InputError("dimension must be positive");
  const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  auto radial = [&](double r) { return obs.profile(r) * std::pow(r, d - 1); };
  using boost::math::quadrature::gauss_kronrod;
  // Integrate piecewise between the profile's kinks so each piece is smooth.
  const std::vector<double> pts = obs.profile_knots();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(radial, pts[i], pts[i + 1], 15, 1e-13, &err);
  }
  return sphere * total;
}

std::vector<double> trapezoid_weights(std::size_t n) {
  if (n < 2) throw InputError("trapezoid rule needs at least two samples");
  std::vector<double> w(n, 1.0 / static_cast<double>(n - 1));
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

std::vector<orbit::ReducedPoint> trajectory(const TrajectorySpec& spec) {
  spec.validate();
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(spec.T / spec.dt - 1e-9)));
  const double dt = spec.T / static_cast<double>(steps);
  std::vector<orbit::ReducedPoint> out;
  out.reserve(steps + 1);
  if (spec.reduce) {
    out.push_back(orbit::reduce(spec.base));
    const groups::SLMatrix h = step_matrix(spec, dt);
    for (std::size_t i = 1; i <= steps; ++i) out.push_back(advance(out.back(), h));
  } else {
    for (std::size_t i = 0; i <= steps; ++i) {
      const groups::SLMatrix h = step_matrix(spec, dt * static_cast<double>(i));
      GroupElement x = groups::left_multiply(h, spec.base);
      const Mat c = x.g.matrix().partialPivLu().solve(x.v);
      out.push_back(orbit::ReducedPoint{std::move(x), c, false});
    }
  }
  return out;
}

BirkhoffResult birkhoff_average(const TrajectorySpec& spec, const Observable& obs) {
  const std::vector<orbit::ReducedPoint> orbit_pts = trajectory(spec);
  const std::size_t n = orbit_pts.size();
  BirkhoffResult res;
  res.dt = spec.T / static_cast<double>(n - 1);
  res.times.resize(n);
  res.values.resize(n);
  res.running_averages.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.times[i] = res.dt * static_cast<double>(i);
    res.values[i] = obs(orbit_pts[i].x);
  }
  // Running trapezoid integral.
  double integral = 0.0;
  res.running_averages[0] = res.values[0];
  for (std::size_t i = 1; i < n; ++i) {
    integral += 0.5 * res.dt * (res.values[i - 1] + res.values[i]);
    res.running_averages[i] = integral / res.times[i];
  }
  const std::vector<double> w = trapezoid_weights(n);
  std::vector<double> weighted(n);
  for (std::size_t i = 0; i < n; ++i) weighted[i] = w[i] * res.values[i];
  res.final = pairwise_sum(weighted);
  res.std_error = batch_stderr(res.values);
  if (obs.is_siegel()) res.reference = siegel_reference(obs, spec.params.d);
  if (obs.kind() == Observable::Kind::Constant) res.reference = obs(spec.base);
  return res;
}

Estimate correlation_estimate(const funcspec::FuncFamily& phi, const FlowParams& p,
                              const funcspec::ParamBox& interval, const Observable& psi, double t,
                              double l, std::size_t n_samples, std::uint64_t seed, double s_prime,
                              Parallelism par) {
  if (!(t >= 0.0) || !(l >= 0.0)) throw InputError("t and l must be non-negative");
  if (n_samples < 2) throw InputError("need at least two samples");
  if (interval.dim() != p.horo_dim()) throw InputError("interval has the wrong dimension");
  Mat e11 = Mat::Zero(p.r, p.cols());
  e11(0, 0) = s_prime;
  const groups::SLMatrix shear = groups::u_of_s(p, e11);
  auto psi_at = [&](double time, const Vec& w) {
    const Mat s = to_s(p, w);
    const orbit::ReducedPoint x = orbit::flow_point(p, time, s, phi.evaluate(w));
    return psi(x.x) - psi(orbit::reduce(groups::left_multiply(shear, x.x)).x);
  };
  const std::vector<double> prod = parallel_map(n_samples, par, [&](std::size_t i) {
    std::mt19937_64 rng = sample_stream(seed, i);
    Vec w(interval.dim());
    for (int a = 0; a < w.size(); ++a) {
      w(a) = interval.lo(a) + (interval.hi(a) - interval.lo(a)) * uniform01(rng);
    }
    return psi_at(t, w) * psi_at(l, w);
  });
  const double vol = interval.volume();
  const double mean = pairwise_sum(prod) / static_cast<double>(n_samples);
  std::vector<double> sq(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) sq[i] = (prod[i] - mean) * (prod[i] - mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n_samples - 1);
  return Estimate{vol * mean, vol * std::sqrt(var / static_cast<double>(n_samples)), n_samples};
}

double sublevel_fraction(const TrajectorySpec& spec, const MIndex& m, const MixedHeightParams& hp,
                         double level) {
  if (!(level > 0.0)) throw InputError("level must be positive");
  const std::vector<orbit::ReducedPoint> pts = trajectory(spec);
  std::size_t hits = 0;
  for (const auto& x : pts) {
    if (heights::beta_m(x.x, m, hp) <= heights::Extended(level)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pts.size());
}

bool admissible(const ContractionContext& ctx, int n, const funcspec::ParamBox& J) {
  const funcspec::ParamBox& I = ctx.I;
  if (J.dim() != I.dim() || n < 0) return false;
  for (int i = 0; i < I.dim(); ++i) {
    if (J.lo(i) < I.lo(i) || J.hi(i) > I.hi(i) || !(J.hi(i) > J.lo(i))) return false;
  }
  if (n == 0) return J.lo == I.lo && J.hi == I.hi;
  const FlowParams& p = ctx.hp.flow();
  const double min_side = std::exp(-p.d * n * ctx.hp.t_step());
  for (int i = 0; i < I.dim(); ++i) {
    if (J.hi(i) - J.lo(i) < min_side) return false;
  }
  return true;
}

double beta_integral(const ContractionContext& ctx, int n, const funcspec::ParamBox& J, int q,
                     Parallelism par) {
  const FlowParams& p = ctx.hp.flow();
  const double time = n * ctx.hp.t_step();
  const std::size_t nodes = funcspec::grid_size(J, q);
  const std::vector<double> vals = parallel_map(nodes, par, [&](std::size_t idx) {
    const Vec s = funcspec::grid_point(J, q, idx);
    const orbit::ReducedPoint x = orbit::flow_point(p, time, to_s(p, s), ctx.phi.evaluate(s));
    const heights::Extended beta = heights::beta_m(x.x, ctx.m, ctx.hp);
    if (beta.is_infinite()) throw NumericError("beta is infinite at a quadrature node");
    return beta.value();
  });
  return J.volume() * pairwise_sum(vals) / static_cast<double>(nodes);
}

double contraction_deficit(const ContractionContext& ctx, int n, const funcspec::ParamBox& J,
                           Parallelism par) {
  const double lhs = beta_integral(ctx, n + 1, J, ctx.quad, par);
  const double half = 0.5 * beta_integral(ctx, n, J, ctx.quad, par);
  return (lhs - half) / J.volume();
}

double calibrate_b(const ContractionContext& ctx,
                   const std::vector<std::pair<int, funcspec::ParamBox>>& pilot, Parallelism par) {
  double b = 0.0;
  for (const auto& [n, J] : pilot) {
    if (!admissible(ctx, n, J)) throw InputError("pilot box is not admissible");
    b = std::max(b, contraction_deficit(ctx, n, J, par));
  }
  return b;
}

ContractionResult contraction_check(const ContractionContext& ctx, int n,
                                    const funcspec::ParamBox& J, double b, Parallelism par) {
  if (!admissible(ctx, n, J)) throw InputError("box violates the side-length precondition");
  ContractionResult r;
  r.lhs = beta_integral(ctx, n + 1, J, ctx.quad, par);
  const double base = beta_integral(ctx, n, J, ctx.quad, par);
  r.rhs = 0.5 * base + b * J.volume();
  r.margin = r.rhs - r.lhs;
  r.lhs_refined = beta_integral(ctx, n + 1, J, 2 * ctx.quad, par);
  const double base_refined = beta_integral(ctx, n, J, 2 * ctx.quad, par);
  r.rhs_refined = 0.5 * base_refined + b * J.volume();
  r.refinement_change = std::max(std::abs(r.lhs_refined - r.lhs) / std::abs(r.lhs),
                                 std::abs(base_refined - base) / std::abs(base));
  return r;
}

std::pair<int, funcspec::ParamBox> random_admissible_box(const ContractionContext& ctx,
                                                         std::mt19937_64& rng, int n_max,
                                                         double min_side) {
  if (n_max < 1) throw InputError("n_max must be at least 1");
  const FlowParams& p = ctx.hp.flow();
  const int n = 1 + static_cast<int>(uniform01(rng) * n_max);
  const double floor_side = std::max(std::exp(-p.d * n * ctx.hp.t_step()), min_side);
  funcspec::ParamBox J{ctx.I.lo, ctx.I.hi};
  for (int i = 0; i < ctx.I.dim(); ++i) {
    const double full = ctx.I.hi(i) - ctx.I.lo(i);
    const double lo_side = std::min(floor_side, full);
    const double side = std::exp(std::log(lo_side) + (std::log(full) - std::log(lo_side)) * uniform01(rng));
    const double start = ctx.I.lo(i) + (full - side) * uniform01(rng);
    J.lo(i) = start;
    J.hi(i) = std::min(start + side, ctx.I.hi(i));
  }
  return {n, J};
}

}  // namespace latgeo::ergodic
