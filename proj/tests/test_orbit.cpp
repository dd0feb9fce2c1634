#include <cmath>
#include <random>

#include "doctest.h"
#include "latgeo/groups.hpp"
#include "latgeo/orbit.hpp"

using namespace latgeo;
using namespace latgeo::orbit;
using groups::FlowParams;
using groups::GroupElement;
using groups::SLMatrix;

namespace {

double dist_to_integers(const Mat& m) {
  double worst = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - std::round(m(i, j))));
  return worst;
}

// x Gamma == y Gamma: the bases differ by SL_d(Z) and the translations by
// lattice vectors.
double coset_distance(const GroupElement& x, const GroupElement& y) {
  const Mat inv = x.g.matrix().inverse();
  return std::max(dist_to_integers(inv * y.g.matrix()), dist_to_integers(inv * (y.v - x.v)));
}

Mat column(double a, double b) {
  Mat m(2, 1);
  m << a, b;
  return m;
}

}  // namespace

TEST_CASE("flow_point is the reduced a_T u_phi in double range") {
  const FlowParams p(2, 1);
  const Mat s = Mat::Constant(1, 1, 0.3);
  const Mat phi = column(0.2, 0.7);
  for (double T : {0.0, 1.0, 3.5, -2.0, 5.9}) {
    CAPTURE(T);
    const ReducedPoint rp = flow_point(p, T, s, phi);
    CHECK_FALSE(rp.high_precision);
    const GroupElement direct = groups::multiply(
        GroupElement(groups::a_t(p, T), Mat::Zero(2, 1)), groups::u_phi(p, s, phi));
    CHECK(coset_distance(rp.x, direct) <= 1e-8);
    CHECK(std::abs(rp.x.g.matrix().determinant() - 1.0) <= 1e-9);
    CHECK(rp.coords.minCoeff() >= 0.0);
    CHECK(rp.coords.maxCoeff() < 1.0);
  }
}

TEST_CASE("multiprecision path agrees with a double computation near the switch") {
  const FlowParams p(2, 1);
  const Mat s = Mat::Constant(1, 1, 0.41421356);
  const Mat phi = column(0.125, 0.375);
  const double T = 6.5;  // d |T| = 13: multiprecision
  const ReducedPoint hp = flow_point(p, T, s, phi);
  CHECK(hp.high_precision);
  const GroupElement direct = groups::multiply(
      GroupElement(groups::a_t(p, T), Mat::Zero(2, 1)), groups::u_phi(p, s, phi));
  // Double loses about e^{2T} ulps here; the coset still matches to 1e-5.
  CHECK(coset_distance(hp.x, direct) <= 1e-5);
}

TEST_CASE("multiprecision resolves far-flowed points") {
  const FlowParams p(3, 1);
  Mat s(1, 2);
  s << 0.3, 0.7;
  Mat phi(3, 1);
  phi << 0.1, 0.2, 0.3;
  const ReducedPoint rp = flow_point(p, 20.0, s, phi);
  CHECK(rp.high_precision);
  CHECK(std::abs(rp.x.g.matrix().determinant() - 1.0) <= 1e-9);
  CHECK(rp.x.g.matrix().allFinite());
  CHECK(rp.coords.minCoeff() >= 0.0);
  CHECK(rp.coords.maxCoeff() < 1.0);

  // Flowing the point back by -20 in double recovers u_phi(s) mod Gamma.
  const GroupElement back = groups::left_multiply(groups::a_t(p, -20.0), rp.x);
  CHECK(coset_distance(back, groups::u_phi(p, s, phi)) <= 1e-6);

  CHECK_THROWS_AS(flow_point(p, 62.0, s, phi), NumericError);
  CHECK_THROWS_AS(flow_point(p, std::nan(""), s, phi), NumericError);
  CHECK_THROWS_AS(flow_point(p, 1.0, Mat::Zero(2, 2), phi), InputError);
  CHECK_THROWS_AS(flow_point(p, 1.0, s, Mat::Zero(2, 1)), InputError);
}

TEST_CASE("reduce is invariant under right multiplication by Gamma") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 3;
    Mat g = Mat::Identity(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) += u(rng);
    if (g.determinant() < 0) g.col(0) *= -1.0;
    Mat v(d, 2);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < 2; ++j) v(i, j) = 3.0 * u(rng);
    const GroupElement x(SLMatrix::renormalized(g), v);

    // gamma = (elementary column operation, integer translation).
    Mat e = Mat::Identity(d, d);
    e(0, d - 1) = static_cast<double>(static_cast<int>(rng() % 7) - 3);
    Mat z(d, 2);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < 2; ++j) z(i, j) = static_cast<double>(static_cast<int>(rng() % 5) - 2);
    const GroupElement gamma(SLMatrix(e), z);
    const GroupElement y = groups::multiply(x, gamma);

    const ReducedPoint rx = reduce(x);
    const ReducedPoint ry = reduce(y);
    CAPTURE(trial);
    CHECK(coset_distance(rx.x, x) <= 1e-9);
    CHECK(coset_distance(rx.x, ry.x) <= 1e-9);
  }
}

TEST_CASE("from_coordinates restores orientation and canonical coordinates") {
  Mat g(2, 2);
  g << 0.0, 1.0, 1.0, 0.0;  // det -1
  const Mat c = column(1.25, -0.25);
  const ReducedPoint rp = from_coordinates(g, c);
  CHECK(rp.x.g.matrix().determinant() == doctest::Approx(1.0));
  CHECK(rp.coords(0, 0) == doctest::Approx(0.25));
  // The last basis vector was negated, so its coordinate flips sign before
  // reduction mod 1: -(-0.25) = 0.25.
  CHECK(rp.coords(1, 0) == doctest::Approx(0.25));
  CHECK((rp.x.v - rp.x.g.matrix() * rp.coords).norm() <= 1e-15);
  // Same coset as the input (g, g c) after the orientation fix.
  Mat fixed = g;
  fixed.col(1) *= -1.0;
  const GroupElement expect(SLMatrix(fixed), fixed * column(1.25, 0.25));
  CHECK(coset_distance(rp.x, expect) <= 1e-12);
}
