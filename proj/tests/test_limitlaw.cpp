#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "latgeo/limitlaw.hpp"
#include "latgeo/random.hpp"

using namespace latgeo;
using namespace latgeo::limitlaw;
using torus::FuncFamily;
using torus::RegionFamily;
using torus::Scene;

namespace {

FuncFamily fam(std::vector<std::string> texts) {
  const int rows = static_cast<int>(texts.size());
  return FuncFamily::parse(texts, rows, 1, 1);
}

Scene default_scene() {
  Scene sc;
  sc.d = 2;
  sc.k = 1;
  sc.U = funcspec::ParamBox{Vec::Constant(1, 0.2), Vec::Constant(1, 0.8)};
  sc.theta = fam({"0", "0"});
  sc.f = fam({"cos(0.3+s1)", "sin(0.3+s1)"});
  sc.u = {fam({"cos(s1)", "sin(s1)"})};
  sc.phi = {fam({"pi/7 + 0.3*s1^2", "sqrt(3)/5"})};
  sc.omega = {RegionFamily::box(fam({"-0.5"}), fam({"0.5"}))};
  return sc;
}

Scene axis_scene() {
  Scene sc = default_scene();
  sc.f = fam({"1", "0"});
  sc.u = {fam({"1", "0"})};
  sc.phi = {fam({"0", "0"})};
  return sc;
}

// Two targets in d = 2: a box and a ball with different orientations.
Scene two_targets() {
  Scene sc = default_scene();
  sc.k = 2;
  sc.u.push_back(fam({"cos(0.5*s1)", "sin(0.5*s1) - 0.2"}));
  sc.phi.push_back(fam({"0.3", "e/7"}));
  sc.omega.push_back(RegionFamily::ball(fam({"0.2"}), fam({"0.7"})));
  return sc;
}

LimitLawSpec spec_for(Scene sc) {
  LimitLawSpec spec;
  spec.scene = std::move(sc);
  spec.s = Vec::Constant(1, 0.5);
  return spec;
}

// Brute force over a coefficient box that covers the window.
std::int64_t naive_count(const lattice::UnimodularLattice& lat, const Mat& w, const Scene& sc,
                         const Vec& s, double T) {
  std::int64_t total = 0;
  const Mat inv = lat.basis().inverse();
  for (int j = 0; j < sc.k; ++j) {
    const Region om = torus::tilde_Omega(sc, s, j);
    const double R = std::hypot(T, om.outer_radius()) + 1.0;
    const double bound = inv.cwiseAbs().rowwise().sum().maxCoeff() * R + 1.0;
    const int B = static_cast<int>(std::ceil(bound));
    for (int a = -B; a <= B; ++a)
      for (int b = -B; b <= B; ++b) {
        Vec c(2);
        c << a + w(0, j), b + w(1, j);
        const Vec p = lat.basis() * c;
        if (p(0) > 0.0 && p(0) < T && om.contains(-p.tail(1))) ++total;
      }
  }
  return total;
}

}  // namespace

TEST_CASE("summarize counts and indicators") {
  LimitLawSpec spec = spec_for(default_scene());
  spec.joint_T = {1.0, 2.0};
  spec.cdf_grid = {0.5, 1.0, 3.0};
  spec.cdf_order = 2;
  spec.moment_T = 2.5;
  const Realization r = summarize({0.7, 1.9, 2.5, 4.0}, spec);
  CHECK(r.joint);
  CHECK(r.cdf == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(r.count == 3.0);
  CHECK_FALSE(summarize({1.2, 1.9}, spec).joint);
  CHECK_FALSE(summarize({0.2}, spec).joint);
  const Realization none = summarize({}, spec);
  CHECK(none.count == 0.0);
  CHECK(none.cdf == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("count on the shifted square lattice") {
  const Scene sc = axis_scene();
  const Vec s = Vec::Constant(1, 0.5);
  // tilde Omega is [-1/2, 1/2) here, so the window is (0, 2) x (-1/2, 1/2].
  const Region om = torus::tilde_Omega(sc, s, 0);
  CHECK(om.volume() == doctest::Approx(1.0));
  const lattice::UnimodularLattice z2(Mat::Identity(2, 2));
  CHECK(count_hits_random_grid(z2, Mat::Constant(2, 1, 0.5), sc, s, 2.0) == 2);
  CHECK(count_hits_random_grid(z2, Mat::Constant(2, 1, 0.5), sc, s, 0.4) == 0);
  CHECK_THROWS_AS(count_hits_random_grid(z2, Mat::Constant(2, 2, 0.5), sc, s, 2.0), InputError);
}

TEST_CASE("random-grid counts match brute force") {
  const Scene sc = two_targets();
  const Vec s = Vec::Constant(1, 0.45);
  for (std::uint64_t i = 0; i < 200; ++i) {
    std::mt19937_64 rng = sample_stream(11, i);
    const lattice::UnimodularLattice lat = lattice::sample_haar_sl2(rng);
    Mat w(2, 2);
    for (int r = 0; r < 2; ++r)
      for (int j = 0; j < 2; ++j) w(r, j) = uniform01(rng);
    const double T = 0.5 + 0.05 * static_cast<double>(i % 60);
    CAPTURE(i);
    CHECK(count_hits_random_grid(lat, w, sc, s, T) == naive_count(lat, w, sc, s, T));
  }
}

TEST_CASE("normalized targets have unit total measure") {
  const Scene sc = two_targets();
  for (double s : {0.2, 0.5, 0.8}) {
    const Vec sv = Vec::Constant(1, s);
    CHECK(torus::tilde_Omega(sc, sv, 0).volume() + torus::tilde_Omega(sc, sv, 1).volume() ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("Monte Carlo: first moment, monotone CDF, determinism") {
  LimitLawSpec spec = spec_for(two_targets());
  spec.samples = 4000;
  spec.seed = 21;
  spec.cdf_grid = {1e-6, 0.5, 1.0, 2.0, 4.0};
  const DistEstimate one = estimate_limit_cdf_mc(spec, {1});
  // E #{points in a window of area T} = T for a Haar-random affine grid.
  CHECK(std::abs(one.mean_count - spec.moment_T) <= 4.0 * one.mean_count_se);
  CHECK(one.marginals.front() <= 1e-3);
  for (std::size_t i = 1; i < one.marginals.size(); ++i) CHECK(one.marginals[i] >= one.marginals[i - 1]);
  // P(tau_1 <= T) <= E count.
  for (std::size_t i = 0; i < one.marginals.size(); ++i) CHECK(one.marginals[i] <= spec.cdf_grid[i] + 4 * one.std_error[i]);

  const DistEstimate three = estimate_limit_cdf_mc(spec, {3});
  CHECK(one.marginals == three.marginals);
  CHECK(one.mean_count == three.mean_count);
  CHECK(one.joint_prob == three.joint_prob);

  spec.seed = 22;
  const DistEstimate other = estimate_limit_cdf_mc(spec, {1});
  CHECK(std::abs(other.mean_count - one.mean_count) <=
        4.0 * std::hypot(one.mean_count_se, other.mean_count_se));

  Scene sc3 = default_scene();
  sc3.d = 3;
  sc3.theta = fam({"0", "0", "0"});
  sc3.f = fam({"1", "sqrt(2)", "sqrt(3)"});
  sc3.u = {fam({"1", "0", "0"})};
  sc3.phi = {fam({"0.1", "0.2", "0.3"})};
  sc3.omega = {RegionFamily::box(fam({"-0.5", "-0.5"}), fam({"0.5", "0.5"}))};
  const LimitLawSpec d3 = spec_for(sc3);
  CHECK_THROWS_AS(estimate_limit_cdf_mc(d3), UnsupportedError);
}

TEST_CASE("Birkhoff and s-average estimators") {
  LimitLawSpec spec = spec_for(default_scene());
  spec.L = 2.0;
  spec.dl = 1.0 / 16.0;
  const DistEstimate b = empirical_birkhoff_cdf(spec);
  CHECK(b.samples == 32);
  for (std::size_t i = 1; i < b.marginals.size(); ++i) CHECK(b.marginals[i] >= b.marginals[i - 1]);
  CHECK(b.marginals.back() <= 1.0);
  CHECK(b.mean_count > 0.0);

  spec.s_grid = 6;
  spec.l_fixed = 2.0;
  const DistEstimate a1 = estimate_limit_cdf_s_average(spec, {1});
  const DistEstimate a2 = estimate_limit_cdf_s_average(spec, {2});
  CHECK(a1.samples + a1.rejected == 6);
  CHECK(a1.marginals == a2.marginals);
  spec.l_fixed = 1.0;
  CHECK_THROWS_AS(estimate_limit_cdf_s_average(spec), InputError);

  LimitLawSpec rational = spec_for(axis_scene());
  CHECK_THROWS_AS(empirical_birkhoff_cdf(rational), InputError);
}

TEST_CASE("ks distance") {
  DistEstimate a;
  a.cdf_grid = {1.0, 2.0, 3.0};
  a.marginals = {0.2, 0.5, 0.9};
  DistEstimate b = a;
  CHECK(ks_distance(a, b) == 0.0);
  b.marginals = {0.25, 0.4, 0.85};
  CHECK(ks_distance(a, b) == doctest::Approx(0.1));
  CHECK(ks_distance(a, b) == ks_distance(b, a));
  b.cdf_grid = {1.0, 2.0, 4.0};
  CHECK_THROWS_AS(ks_distance(a, b), InputError);
}

TEST_CASE("spec validation") {
  LimitLawSpec spec = spec_for(default_scene());
  spec.joint_T.clear();
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = spec_for(default_scene());
  spec.cdf_grid = {0.0};
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = spec_for(default_scene());
  spec.dl = 0.0;
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = spec_for(default_scene());
  spec.s = Vec::Zero(2);
  CHECK_THROWS_AS(spec.validate(), InputError);
  spec = spec_for(default_scene());
  spec.screen_height = 0;
  CHECK_THROWS_AS(spec.validate(), InputError);
}
