#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "latgeo/torus.hpp"

using namespace latgeo;
using namespace latgeo::torus;

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  // The expression grammar has no unary plus and needs parentheses around
  // negative literals inside sums.
  return "(" + os.str() + ")";
}

FuncFamily constant_vec(const Vec& v) {
  std::vector<std::string> texts;
  for (int i = 0; i < v.size(); ++i) texts.push_back(num(v(i)));
  return FuncFamily::parse(texts, static_cast<int>(v.size()), 1, 1);
}

RegionFamily constant_box(const Vec& lo, const Vec& hi) {
  return RegionFamily::box(constant_vec(lo), constant_vec(hi));
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// One target, everything constant in s.
Scene constant_scene(const Vec& theta, const Vec& f, const Vec& u, const Vec& phi, const Vec& lo,
                     const Vec& hi) {
  Scene sc;
  sc.d = static_cast<int>(f.size());
  sc.k = 1;
  sc.U = ParamBox{Vec::Zero(1), Vec::Ones(1)};
  sc.theta = constant_vec(theta);
  sc.f = constant_vec(f);
  sc.u = {constant_vec(u)};
  sc.phi = {constant_vec(phi)};
  sc.omega = {constant_box(lo, hi)};
  return sc;
}

Scene default_scene() {
  Scene sc;
  sc.d = 2;
  sc.k = 1;
  sc.U = ParamBox{Vec::Constant(1, 0.2), Vec::Constant(1, 0.8)};
  sc.theta = FuncFamily::parse({"0", "0"}, 2, 1, 1);
  sc.f = FuncFamily::parse({"cos(0.3+s1)", "sin(0.3+s1)"}, 2, 1, 1);
  sc.u = {FuncFamily::parse({"cos(s1)", "sin(s1)"}, 2, 1, 1)};
  sc.phi = {FuncFamily::parse({"pi/7 + 0.3*s1^2", "sqrt(3)/5"}, 2, 1, 1)};
  sc.omega = {RegionFamily::box(FuncFamily::parse({"-0.5"}, 1, 1, 1), FuncFamily::parse({"0.5"}, 1, 1, 1))};
  return sc;
}

// d = 3, two targets, one box and one ball.
Scene two_target_scene() {
  Scene sc;
  sc.d = 3;
  sc.k = 2;
  sc.U = ParamBox{Vec::Zero(1), Vec::Ones(1)};
  sc.theta = FuncFamily::parse({"0.1", "0.2", "0.3"}, 3, 1, 1);
  sc.f = FuncFamily::parse({"1", "sqrt(2)", "pi/3 + 0.1*s1"}, 3, 1, 1);
  sc.u = {FuncFamily::parse({"1", "0.2", "0.1"}, 3, 1, 1),
          FuncFamily::parse({"0.3", "1", "0.5*s1"}, 3, 1, 1)};
  sc.phi = {FuncFamily::parse({"0.5", "0.25", "e/5"}, 3, 1, 1),
            FuncFamily::parse({"sqrt(5)/3", "0.1", "0.7"}, 3, 1, 1)};
  sc.omega = {RegionFamily::box(FuncFamily::parse({"-0.5", "-0.25"}, 2, 1, 1),
                                FuncFamily::parse({"0.5", "0.25"}, 2, 1, 1)),
              RegionFamily::ball(FuncFamily::parse({"0.1", "0"}, 2, 1, 1),
                                 FuncFamily::parse({"0.6"}, 1, 1, 1))};
  return sc;
}

void check_same_series(const HitSeries& a, const HitSeries& b, double tol) {
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CAPTURE(i);
    CHECK(std::abs(a.events[i].t_abs - b.events[i].t_abs) <= tol);
    CHECK(a.events[i].j == b.events[i].j);
    CHECK(a.events[i].kvec == b.events[i].kvec);
  }
}

}  // namespace

TEST_CASE("axis-aligned flow hits at integer times") {
  const Scene sc = constant_scene(vec({0, 0}), vec({1, 0}), vec({1, 0}), vec({0, 0}), vec({-0.5}),
                                  vec({0.5}));
  const HitSeries h = hit_times(sc, Vec::Constant(1, 0.5), 0.0, 3.5);
  REQUIRE(h.events.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(h.events[i].t_abs == doctest::Approx(i + 1.0));
    CHECK(h.events[i].x_local.norm() <= 1e-12);
  }
  // Omega away from the only crossing coordinate: no hits at all.
  const Scene miss = constant_scene(vec({0, 0}), vec({1, 0}), vec({1, 0}), vec({0, 0}), vec({0.3}),
                                    vec({0.4}));
  CHECK(hit_times(miss, Vec::Constant(1, 0.5), 0.0, 50.0).events.empty());
}

TEST_CASE("closed form agrees with the time-stepping oracle") {
  const Scene sc = default_scene();
  for (double s : {0.25, 0.5, 0.71}) {
    for (double l : {0.0, 1.0, 2.5}) {
      CAPTURE(s);
      CAPTURE(l);
      const Vec sv = Vec::Constant(1, s);
      check_same_series(hit_times(sc, sv, l, 60.0), hit_times_oracle(sc, sv, l, 60.0), 1e-9);
    }
  }
  const Scene two = two_target_scene();
  for (double l : {0.0, 0.7}) {
    const Vec sv = Vec::Constant(1, 0.4);
    const HitSeries a = hit_times(two, sv, l, 30.0);
    CHECK(a.events.size() >= 5);
    check_same_series(a, hit_times_oracle(two, sv, l, 30.0), 1e-9);
  }
}

TEST_CASE("events are ordered and local coordinates lie in the scaled target") {
  const Scene sc = two_target_scene();
  const Vec s = Vec::Constant(1, 0.6);
  const double l = 0.5;
  const HitSeries h = hit_times(sc, s, l, 40.0);
  const SceneAt at = evaluate(sc, s);
  for (std::size_t i = 0; i < h.events.size(); ++i) {
    const HitEvent& e = h.events[i];
    if (i > 0) CHECK(h.events[i - 1].t_abs <= e.t_abs);
    CHECK(e.t_abs > 0.0);
    CHECK(e.t_abs <= 40.0);
    CHECK(at.omega[e.j].contains(e.x_local));
    // Recompute the crossing from scratch.
    const Vec point = at.theta + e.t_abs * at.f - at.phi[e.j] - e.kvec.cast<double>();
    const Vec rotated = at.rot[e.j] * point;
    CHECK(std::abs(rotated(0)) <= 1e-9);
    CHECK((std::exp(l) * rotated.tail(2) - e.x_local).norm() <= 1e-8);
  }
}

TEST_CASE("integer shifts of phi and theta leave the series unchanged") {
  const Scene base = constant_scene(vec({0.1, 0.2}), vec({1, std::sqrt(2.0)}), vec({1, 0.3}),
                                    vec({0.4, 0.6}), vec({-0.3}), vec({0.3}));
  const Scene shifted = constant_scene(vec({2.1, -0.8}), vec({1, std::sqrt(2.0)}), vec({1, 0.3}),
                                       vec({-2.6, 5.6}), vec({-0.3}), vec({0.3}));
  const Vec s = Vec::Constant(1, 0.5);
  const HitSeries a = hit_times(base, s, 1.0, 80.0);
  const HitSeries b = hit_times(shifted, s, 1.0, 80.0);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].t_abs == doctest::Approx(b.events[i].t_abs).epsilon(1e-12));
    CHECK((a.events[i].x_local - b.events[i].x_local).norm() <= 1e-9);
  }
}

TEST_CASE("shrinking targets give nested hit sets") {
  const Scene sc = default_scene();
  const Vec s = Vec::Constant(1, 0.5);
  const HitSeries coarse = hit_times(sc, s, 1.0, 200.0);
  const HitSeries fine = hit_times(sc, s, 2.0, 200.0);
  CHECK(fine.events.size() < coarse.events.size());
  std::size_t pos = 0;
  for (const HitEvent& e : fine.events) {
    while (pos < coarse.events.size() && coarse.events[pos].t_abs < e.t_abs - 1e-12) ++pos;
    REQUIRE(pos < coarse.events.size());
    CHECK(coarse.events[pos].t_abs == doctest::Approx(e.t_abs).epsilon(1e-14));
    CHECK(coarse.events[pos].kvec == e.kvec);
  }
}

TEST_CASE("normalized return times have mean gap one") {
  const Scene sc = default_scene();
  const Vec s = Vec::Constant(1, 0.5);
  const double l = 2.0;
  const double sigma = mean_return_sigma(sc, s);
  CHECK(sigma == doctest::Approx(1.0 / std::cos(0.3)).epsilon(1e-12));
  const HitSeries h = hit_times(sc, s, l, 3000.0 * std::exp(l) * sigma);
  const std::vector<double> tau = normalized_times(h, sc, s, l);
  REQUIRE(tau.size() > 2000);
  const double mean_gap = tau.back() / static_cast<double>(tau.size());
  CHECK(mean_gap == doctest::Approx(1.0).epsilon(0.05));
  for (std::size_t i = 1; i < tau.size(); ++i) CHECK(tau[i] >= tau[i - 1]);
}

TEST_CASE("tilde R and the normalized targets") {
  const Scene sc = two_target_scene();
  for (int trial = 0; trial < 5; ++trial) {
    const Vec s = Vec::Constant(1, 0.2 * trial + 0.1);
    const SceneAt at = evaluate(sc, s);
    double total = 0.0;
    for (int j = 0; j < sc.k; ++j) {
      const Mat R = tilde_R(sc, s, j);
      CHECK(std::abs(R.determinant()) == doctest::Approx(at.uf[j]).epsilon(1e-12));
      total += tilde_Omega(sc, s, j).volume();
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(tilde_R(sc, Vec::Constant(1, 0.5), 2), InputError);
}

TEST_CASE("tangential and malformed scenes are rejected") {
  const Scene tangent = constant_scene(vec({0, 0}), vec({1, 0}), vec({0, 1}), vec({0, 0}), vec({-0.5}),
                                       vec({0.5}));
  CHECK_THROWS_AS(hit_times(tangent, Vec::Constant(1, 0.5), 0.0, 10.0), DegenerateError);
  Scene bad = default_scene();
  bad.omega.clear();
  CHECK_THROWS_AS(bad.validate(), InputError);
  CHECK_THROWS_AS(hit_times(default_scene(), Vec::Constant(1, 0.5), 0.0, -1.0), InputError);
  CHECK_THROWS_AS(RegionFamily::box(constant_vec(vec({0.5})), constant_vec(vec({-0.5}))).evaluate(Vec::Zero(1)),
                  InputError);
}

TEST_CASE("rational relation witnesses") {
  const auto w = rational_relation_witness(vec({1, 1}).normalized(), 10);
  REQUIRE(w.has_value());
  CHECK(*w == (IVec(2) << 1, -1).finished());
  CHECK_FALSE(rational_relation_witness(vec({1, std::sqrt(2.0)}), 10'000).has_value());

  const Vec f = vec({2, 3, 6}) / 7.0;
  const auto q = rational_relation_witness(f, 100);
  REQUIRE(q.has_value());
  CHECK(std::abs(q->cast<double>().dot(f)) < 1e-10 * q->cast<double>().norm());
  CHECK(q->cwiseAbs().maxCoeff() <= 100);
  // No shorter nonzero integer vector is a relation.
  const double len = q->cast<double>().norm();
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int c = -3; c <= 3; ++c) {
        const Vec v = vec({double(a), double(b), double(c)});
        if (v.norm() == 0.0 || v.norm() >= len - 1e-12) continue;
        CHECK(std::abs(v.dot(f)) >= 1e-10 * v.norm());
      }
  for (int i = 0; i < q->size(); ++i) {
    if ((*q)(i) != 0) {
      CHECK((*q)(i) > 0);
      break;
    }
  }
  const auto q4 = rational_relation_witness(vec({1, std::sqrt(2.0), std::sqrt(3.0), 1 + std::sqrt(2.0)}), 50);
  REQUIRE(q4.has_value());
  CHECK(*q4 == (IVec(4) << 1, 1, 0, -1).finished());
  CHECK_THROWS_AS(rational_relation_witness(vec({1, 1}), 0), InputError);
}
