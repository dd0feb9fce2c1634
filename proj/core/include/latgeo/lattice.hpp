#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "latgeo/region.hpp"
#include "latgeo/types.hpp"

namespace latgeo::lattice {

inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

/// Delta = basis * Z^d with columns as basis vectors; ||det| - 1| <= 1e-8.
class UnimodularLattice {
 public:
  explicit UnimodularLattice(Mat basis);
  const Mat& basis() const { return basis_; }
  int dim() const { return static_cast<int>(basis_.rows()); }

 private:
  Mat basis_;
};

/// The k point sets basis * (Z^d + c_j). Offsets are held in lattice
/// coordinates c_j, canonicalized into [0, 1)^d.
class AffineGrid {
 public:
  /// offsets: d x k matrix of translation vectors xi_j in ambient coordinates.
  AffineGrid(UnimodularLattice lat, const Mat& offsets);
  static AffineGrid from_coordinates(UnimodularLattice lat, const Mat& coords);

  const UnimodularLattice& lattice() const { return lat_; }
  int k() const { return static_cast<int>(coords_.cols()); }
  /// Canonical ambient offset of grid j.
  Vec offset(int j) const { return lat_.basis() * coords_.col(j); }
  const Mat& coordinates() const { return coords_; }

 private:
  AffineGrid(UnimodularLattice lat, Mat coords, bool);
  UnimodularLattice lat_;
  Mat coords_;
};

/// Primitive integer generators (d x i, lattice coordinates) of L cap Delta.
class RationalSubspace {
 public:
  /// Throws InputError unless gens has full column rank and the gcd of its
  /// i x i minors is 1.
  explicit RationalSubspace(IMat gens);
  static RationalSubspace zero(int d);

  int dim() const { return static_cast<int>(gens_.cols()); }
  int ambient() const { return static_cast<int>(gens_.rows()); }
  const IMat& gens() const { return gens_; }

 private:
  RationalSubspace(IMat gens, bool) : gens_(std::move(gens)) {}
  IMat gens_;
};

struct LllResult {
  Mat basis;      // reduced basis (columns)
  IMat transform; // basis = input * transform, det transform = +-1
};

LllResult lll_reduce(const Mat& basis, double delta = 0.99);

struct LatticeVector {
  Vec point;
  IVec coeffs;     // coordinates with respect to the input basis
  double length;   // |point| for SVP, |target - point| for CVP
};

/// Exact shortest nonzero vector; ties broken by the lexicographically
/// smallest coefficient vector.
LatticeVector shortest_vector(const Mat& basis);
LatticeVector shortest_vector(const UnimodularLattice& lat);
/// Exact closest lattice point, same tie-break.
LatticeVector closest_vector(const Mat& basis, const Vec& target);
LatticeVector closest_vector(const UnimodularLattice& lat, const Vec& target);
/// lambda_1.
double first_minimum(const Mat& basis);

/// Calls visit(point, coeffs) for every p = basis z + offset, z integer, with
/// |p - center|^2 <= radius^2. The basis should be LLL reduced for speed;
/// coeffs are with respect to the supplied basis. A rank-deficient m x n basis
/// (n < m) is allowed when center - offset lies in its span.
void for_each_point_in_ball(const Mat& basis, const Vec& offset, const Vec& center,
                            double radius,
                            const std::function<void(const Vec&, const Vec&)>& visit,
                            std::uint64_t budget = kEnumerationBudget);

/// Covolume of L cap Delta: sqrt of the Gram determinant; 1 for L = {0}.
double subspace_covolume(const UnimodularLattice& lat, const RationalSubspace& sub);

/// Covolume-minimizing primitive rank-i sublattice together with alpha_i.
struct AlphaResult {
  double alpha = 1.0;
  double covolume = 1.0;
  IMat best;  // d x i generators in lattice coordinates (empty for i = 0)
};

/// alpha_i = sup over Delta-rational L of dimension i of 1 / d(L).
/// Exact for d <= 4; for d in 5..6 only i in {0, 1, d-1, d}.
AlphaResult alpha_i(const UnimodularLattice& lat, int i,
                    std::uint64_t budget = kEnumerationBudget);

/// sum_i eps^{q(i) - q(1)} alpha_i^nu with q(i) = i (d - i).
double margulis_alpha_tilde(const UnimodularLattice& lat, double eps, double nu);

/// Default height exponents.
inline constexpr double kDefaultEps = 0.01;
double default_nu(int r, int d);

/// Haar-random unimodular lattice in dimension 2.
UnimodularLattice sample_haar_sl2(std::mt19937_64& rng);

/// Points of grid j in (0, T) x (-cross): the first coordinate in the open
/// interval, the negated remaining coordinates in `cross`.
struct CylinderRegion {
  double T = 0.0;
  Region cross;
};

std::int64_t count_points_in_region(const AffineGrid& grid, int j, const CylinderRegion& region,
                                    std::uint64_t budget = kEnumerationBudget);

}  // namespace latgeo::lattice
