#pragma once

#include "latgeo/groups.hpp"
#include "latgeo/types.hpp"

namespace latgeo::orbit {

/// Reduced representative of a point of G / Gamma: g is LLL reduced and the
/// translation is v = g c with lattice coordinates c in [0, 1)^{d x k}.
struct ReducedPoint {
  groups::GroupElement x;
  Mat coords;
  bool high_precision = false;
};

/// Largest d |T| evaluated in double precision.
inline constexpr double kDoubleRange = 12.0;
/// Largest d |T| the multiprecision path accepts.
inline constexpr double kMaxRange = 184.0;

/// a_T u(s) (Id, phi_of_s) Gamma. Switches to 100-digit arithmetic when
/// d |T| exceeds kDoubleRange so that far-flowed points are resolved exactly
/// at the supplied s; throws NumericError beyond kMaxRange.
ReducedPoint flow_point(const groups::FlowParams& p, double T, const Mat& s, const Mat& phi_of_s);

/// Reduced representative of x Gamma in double precision.
ReducedPoint reduce(const groups::GroupElement& x);

/// Representative with basis g and lattice coordinates c (taken mod 1).
ReducedPoint from_coordinates(const Mat& g, const Mat& coords);

}  // namespace latgeo::orbit
