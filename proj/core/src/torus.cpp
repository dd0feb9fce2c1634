#include "latgeo/torus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "latgeo/groups.hpp"
#include "latgeo/lattice.hpp"

namespace latgeo::torus {

namespace {

constexpr double kTangential = 1e-9;
constexpr double kTieTol = 1e-12;

Vec unit(const Mat& m, const char* what) {
  Vec v = Eigen::Map<const Vec>(m.data(), m.size());
  const double n = v.norm();
  if (!(n > 1e-9)) throw InputError(std::string(what) + " has norm below 1e-9");
  return v / n;
}

Vec column(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

void check_shape(const FuncFamily& f, int rows, int cols, int inputs, const std::string& what) {
  if (f.rows() != rows || f.cols() != cols)
    throw InputError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " output");
  if (f.inputs() != inputs) throw InputError(what + ": parameter dimension mismatch");
}

// Visits every integer vector in the axis box [lo, hi] (inclusive bounds).
template <class Visit>
void for_each_integer(const IVec& lo, const IVec& hi, Visit&& visit) {
  const int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i)
    if (hi(i) < lo(i)) return;
  IVec k = lo;
  while (true) {
    visit(k);
    int i = 0;
    while (i < d && k(i) == hi(i)) {
      k(i) = lo(i);
      ++i;
    }
    if (i == d) return;
    ++k(i);
  }
}

// Sorts by time and orders simultaneous hits by target index, then k.
void order_events(std::vector<HitEvent>& ev) {
  auto lex = [](const HitEvent& a, const HitEvent& b) {
    if (a.j != b.j) return a.j < b.j;
    return std::lexicographical_compare(a.kvec.data(), a.kvec.data() + a.kvec.size(),
                                        b.kvec.data(), b.kvec.data() + b.kvec.size());
  };
  std::sort(ev.begin(), ev.end(), [&](const HitEvent& a, const HitEvent& b) {
    if (a.t_abs != b.t_abs) return a.t_abs < b.t_abs;
    return lex(a, b);
  });
  std::size_t i = 0;
  while (i < ev.size()) {
    std::size_t e = i + 1;
    while (e < ev.size() && ev[e].t_abs - ev[e - 1].t_abs <= kTieTol * std::max(1.0, ev[e].t_abs))
      ++e;
    if (e - i > 1) std::sort(ev.begin() + i, ev.begin() + e, lex);
    i = e;
  }
}

void check_horizon(double l, double t_max) {
  if (!std::isfinite(l)) throw InputError("l must be finite");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InputError("t_max must be positive");
}

void push(std::vector<HitEvent>& ev, HitEvent e) {
  if (ev.size() >= kMaxEvents) throw BudgetError("hit enumeration exceeded the event budget");
  ev.push_back(std::move(e));
}

IVec floor_vec(const Vec& v) {
  IVec out(v.size());
  for (int i = 0; i < v.size(); ++i) out(i) = static_cast<std::int64_t>(std::floor(v(i)));
  return out;
}

IVec ceil_vec(const Vec& v) {
  IVec out(v.size());
  for (int i = 0; i < v.size(); ++i) out(i) = static_cast<std::int64_t>(std::ceil(v(i)));
  return out;
}

IVec normalize_sign(IVec q) {
  for (int i = 0; i < q.size(); ++i) {
    if (q(i) != 0) {
      if (q(i) < 0) q = -q;
      break;
    }
  }
  return q;
}

bool is_relation(const Vec& f, const IVec& q, std::int64_t H) {
  if (q.isZero() || q.cwiseAbs().maxCoeff() > H) return false;
  const Vec qd = q.cast<double>();
  return std::abs(qd.dot(f)) < 1e-10 * qd.norm();
}

}  // namespace

RegionFamily::RegionFamily(bool is_box, FuncFamily a, FuncFamily b)
    : is_box_(is_box), a_(std::move(a)), b_(std::move(b)) {}

RegionFamily RegionFamily::box(FuncFamily lo, FuncFamily hi) {
  if (lo.cols() != 1 || hi.cols() != 1 || lo.rows() != hi.rows())
    throw InputError("box bounds must be column vectors of equal length");
  if (lo.inputs() != hi.inputs()) throw InputError("box bounds parameter dimension mismatch");
  return RegionFamily(true, std::move(lo), std::move(hi));
}

RegionFamily RegionFamily::ball(FuncFamily center, FuncFamily radius) {
  if (center.cols() != 1 || radius.rows() != 1 || radius.cols() != 1)
    throw InputError("ball needs a column center and a scalar radius");
  if (center.inputs() != radius.inputs()) throw InputError("ball parameter dimension mismatch");
  return RegionFamily(false, std::move(center), std::move(radius));
}

Region RegionFamily::evaluate(const Vec& s) const {
  const Vec a = column(a_.evaluate(s));
  if (is_box_) {
    const Vec b = column(b_.evaluate(s));
    if ((b.array() <= a.array()).any()) throw InputError("box bounds need lo < hi");
    return Region(Box{a, b});
  }
  const double radius = b_.evaluate(s)(0, 0);
  if (!(radius > 0.0)) throw InputError("ball radius must be positive");
  return Region(Ball{a, radius});
}

void Scene::validate() const {
  if (d < 2 || d > 6) throw InputError("d must lie in 2..6");
  if (k < 1) throw InputError("need at least one target");
  const int n = U.dim();
  if (n < 1 || U.hi.size() != n) throw InputError("parameter box U is malformed");
  if ((U.hi.array() <= U.lo.array()).any()) throw InputError("parameter box U needs lo < hi");
  check_shape(theta, d, 1, n, "theta");
  check_shape(f, d, 1, n, "f");
  if (static_cast<int>(u.size()) != k || static_cast<int>(phi.size()) != k ||
      static_cast<int>(omega.size()) != k)
    throw InputError("u, phi and Omega need one entry per target");
  for (int j = 0; j < k; ++j) {
    const std::string tag = "[" + std::to_string(j) + "]";
    check_shape(u[j], d, 1, n, "u" + tag);
    check_shape(phi[j], d, 1, n, "phi" + tag);
    if (omega[j].dim() != d - 1) throw InputError("Omega" + tag + " must live in R^{d-1}");
    if (omega[j].first().inputs() != n) throw InputError("Omega" + tag + " parameter mismatch");
  }
}

SceneAt evaluate(const Scene& scene, const Vec& s) {
  scene.validate();
  if (s.size() != scene.U.dim()) throw InputError("s has the wrong dimension");
  SceneAt at;
  at.theta = column(scene.theta.evaluate(s));
  at.f = unit(scene.f.evaluate(s), "f");
  for (int j = 0; j < scene.k; ++j) {
    Vec uj = unit(scene.u[j].evaluate(s), "u");
    const double uf = uj.dot(at.f);
    if (uf <= kTangential)
      throw DegenerateError("target " + std::to_string(j) + " is tangential to the flow");
    at.rot.push_back(groups::rotation_to_e1(uj).matrix());
    at.u.push_back(std::move(uj));
    at.uf.push_back(uf);
    at.phi.push_back(column(scene.phi[j].evaluate(s)));
    at.omega.push_back(scene.omega[j].evaluate(s));
  }
  return at;
}

double mean_return_sigma(const Scene& scene, const Vec& s) {
  const SceneAt at = evaluate(scene, s);
  double total = 0.0;
  for (int j = 0; j < scene.k; ++j) total += at.omega[j].volume() * at.uf[j];
  if (!(total > 0.0)) throw DegenerateError("targets have zero flux");
  return 1.0 / total;
}

Mat tilde_R(const Scene& scene, const Vec& s, int j) {
  const SceneAt at = evaluate(scene, s);
  if (j < 0 || j >= scene.k) throw InputError("target index out of range");
  const Mat rf = groups::rotation_to_e1(at.f).matrix();
  const Mat full = rf * at.rot[j].transpose();
  const int n = scene.d - 1;
  return full.bottomRightCorner(n, n);
}

Region tilde_Omega(const Scene& scene, const Vec& s, int j) {
  const double sigma = mean_return_sigma(scene, s);
  const Mat rt = tilde_R(scene, s, j);
  const Region omega = scene.omega[j].evaluate(s);
  return omega.transformed(std::pow(sigma, 1.0 / (scene.d - 1)) * rt);
}

// A hit on translate k of target j happens where the first coordinate of
// R_u (theta + t f - phi - k) vanishes; that is linear in t with slope u.f > 0,
// so each (j, k) yields at most one crossing. The crossing lies within
// rho = e^{-l} outer_radius(Omega) of the segment, so scanning unit chunks of
// the segment and keeping a crossing only in the chunk that contains its time
// lists every hit exactly once.
HitSeries hit_times(const Scene& scene, const Vec& s, double l, double t_max) {
  check_horizon(l, t_max);
  const SceneAt at = evaluate(scene, s);
  const int d = scene.d;
  const double shrink = std::exp(-l);
  const double grow = std::exp(l);
  HitSeries out;
  for (int j = 0; j < scene.k; ++j) {
    const double rho = shrink * at.omega[j].outer_radius() + 1e-9;
    const Mat& R = at.rot[j];
    const Vec base = at.theta - at.phi[j];
    const double uf = at.uf[j];
    const Vec Rbase = R * base;
    const Vec Rf = R * at.f;
    for (double t0 = 0.0; t0 < t_max; t0 += 1.0) {
      const double t1 = std::min(t0 + 1.0, t_max);
      const Vec P = base + t0 * at.f;
      const Vec Q = base + t1 * at.f;
      const Vec lo = P.cwiseMin(Q).array() - rho;
      const Vec hi = P.cwiseMax(Q).array() + rho;
      for_each_integer(ceil_vec(lo), floor_vec(hi), [&](const IVec& kv) {
        const Vec kd = kv.cast<double>();
        const Vec Rk = R * kd;
        const double t = (Rk(0) - Rbase(0)) / uf;
        if (!(t > t0 && t <= t1)) return;
        const Vec w = Rbase + t * Rf - Rk;
        Vec x = grow * w.tail(d - 1);
        if (!at.omega[j].contains(x)) return;
        push(out.events, HitEvent{t, j, std::move(x), kv});
      });
    }
  }
  order_events(out.events);
  return out;
}

HitSeries hit_times_oracle(const Scene& scene, const Vec& s, double l, double t_max) {
  check_horizon(l, t_max);
  const SceneAt at = evaluate(scene, s);
  const int d = scene.d;
  const double shrink = std::exp(-l);
  const double grow = std::exp(l);
  const double step = shrink / 8.0;  // f is a unit vector
  const auto n_steps = static_cast<std::int64_t>(std::ceil(t_max / step));
  HitSeries out;
  for (int j = 0; j < scene.k; ++j) {
    const Mat& R = at.rot[j];
    const Vec base = at.theta - at.phi[j];
    const double reach = shrink * at.omega[j].outer_radius() + step + 1e-9;
    auto lead = [&](double t, const Vec& kd) { return (R * (base + t * at.f - kd))(0); };
    for (std::int64_t i = 0; i < n_steps; ++i) {
      const double ta = static_cast<double>(i) * step;
      const double tb = std::min(static_cast<double>(i + 1) * step, t_max);
      const Vec p = base + ta * at.f;
      const Vec lo = p.array() - reach;
      const Vec hi = p.array() + reach;
      for_each_integer(ceil_vec(lo), floor_vec(hi), [&](const IVec& kv) {
        const Vec kd = kv.cast<double>();
        double ga = lead(ta, kd);
        const double gb = lead(tb, kd);
        if (!(ga < 0.0 && gb >= 0.0)) return;
        double a = ta, b = tb;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
          const double mid = 0.5 * (a + b);
          if (lead(mid, kd) < 0.0) a = mid;
          else b = mid;
        }
        const double t = b;
        if (!(t > 0.0 && t <= t_max)) return;
        const Vec w = R * (base + t * at.f - kd);
        Vec x = grow * w.tail(d - 1);
        if (!at.omega[j].contains(x)) return;
        push(out.events, HitEvent{t, j, std::move(x), kv});
      });
    }
  }
  order_events(out.events);
  return out;
}

std::vector<double> normalized_times(const HitSeries& series, const Scene& scene, const Vec& s,
                                     double l) {
  const double scale = std::exp((scene.d - 1) * l) * mean_return_sigma(scene, s);
  std::vector<double> out;
  out.reserve(series.events.size());
  for (const HitEvent& e : series.events) out.push_back(e.t_abs / scale);
  return out;
}

std::optional<IVec> rational_relation_witness(const Vec& f, std::int64_t H) {
  const int d = static_cast<int>(f.size());
  if (d < 2 || d > 6) throw InputError("relation search needs 2 <= d <= 6");
  if (H < 1) throw InputError("height bound must be positive");
  if (!(f.norm() > 0.0)) throw InputError("f must be nonzero");

  if (d == 2) {
    // Solve for the coordinate with the larger |f| entry, scanning the other.
    const int a = std::abs(f(0)) >= std::abs(f(1)) ? 0 : 1;
    const int b = 1 - a;
    for (std::int64_t qb = 1; qb <= H; ++qb) {
      IVec q(2);
      q(b) = qb;
      q(a) = static_cast<std::int64_t>(std::llround(-static_cast<double>(qb) * f(b) / f(a)));
      if (is_relation(f, q, H)) return normalize_sign(q);
    }
    return std::nullopt;
  }

  // Relations are short vectors of the lattice {(q, W q.f)}: with W = 1e10 a
  // witness q has |(q, W q.f)| < sqrt(2) |q|. Search balls of doubling radius
  // so the first hit is the shortest relation.
  const double W = 1e10;
  Mat basis = Mat::Zero(d + 1, d);
  basis.topRows(d) = Mat::Identity(d, d);
  basis.row(d) = W * f.transpose();
  const Vec origin = Vec::Zero(d + 1);
  const double limit = std::sqrt(2.0 * d) * static_cast<double>(H);
  for (double radius = 2.0;; radius = std::min(2.0 * radius, limit)) {
    std::optional<IVec> best;
    double best_norm = std::numeric_limits<double>::infinity();
    lattice::for_each_point_in_ball(basis, origin, origin, radius,
                                    [&](const Vec&, const Vec& coeffs) {
                                      IVec q(d);
                                      for (int i = 0; i < d; ++i)
                                        q(i) = std::llround(coeffs(i));
                                      if (!is_relation(f, q, H)) return;
                                      q = normalize_sign(q);
                                      const double n = q.cast<double>().norm();
                                      const bool better =
                                          n < best_norm - 1e-12 ||
                                          (n <= best_norm + 1e-12 && best &&
                                           std::lexicographical_compare(
                                               q.data(), q.data() + d, best->data(),
                                               best->data() + d));
                                      if (!best || better) {
                                        best = q;
                                        best_norm = n;
                                      }
                                    });
    // Every relation with |q| <= radius / sqrt(2) was inside this ball.
    if (best && best_norm <= radius / std::sqrt(2.0)) return best;
    if (radius >= limit) return best;
  }
}

}  // namespace latgeo::torus
