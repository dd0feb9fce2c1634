#pragma once

#include "latgeo/types.hpp"

namespace latgeo::groups {

inline constexpr int kMaxGroupDim = 6;

/// Dimension data for the diagonal flow a_t and the horospherical
/// parametrization u(s): s is an r x (d - r) matrix.
struct FlowParams {
  int d = 2;
  int r = 1;

  FlowParams() = default;
  FlowParams(int dim, int rank);

  int cols() const { return d - r; }
  int horo_dim() const { return r * (d - r); }
};

/// Element of SL_d(R), 2 <= d <= 6, with |det - 1| <= 1e-9.
class SLMatrix {
 public:
  explicit SLMatrix(Mat m);

  /// Scales a matrix with positive determinant onto SL_d. This is the only
  /// place a determinant is ever corrected.
  static SLMatrix renormalized(Mat m);
  static SLMatrix identity(int d);

  const Mat& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }

  /// Throws NumericError when the product's determinant drifts beyond 1e-6.
  SLMatrix operator*(const SLMatrix& other) const;
  SLMatrix inverse() const;

 private:
  struct Unchecked {};
  SLMatrix(Mat m, Unchecked) : m_(std::move(m)) {}
  friend SLMatrix make_diagonal(const Vec& diag);

  Mat m_;
};

/// (g, v) in SL_d(R) x (R^d)^k; v holds the k translation columns.
struct GroupElement {
  SLMatrix g;
  Mat v;

  GroupElement(SLMatrix g_, Mat v_);
  static GroupElement identity(int d, int k);

  int dim() const { return g.dim(); }
  int k() const { return static_cast<int>(v.cols()); }
};

/// (g, v) * (g', v') = (g g', v + g v').
GroupElement multiply(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& x);
/// Left multiplication by an element of SL_d embedded as (h, 0).
GroupElement left_multiply(const SLMatrix& h, const GroupElement& x);

/// diag(e^{(d-r)t} x r, e^{-rt} x (d-r)).
SLMatrix a_t(const FlowParams& p, double t);
/// Identity with upper-right r x (d-r) block s.
SLMatrix u_of_s(const FlowParams& p, const Mat& s);
/// u(s) * (Id, phi(s)) = (u(s), u(s) phi(s)).
GroupElement u_phi(const FlowParams& p, const Mat& s, const Mat& phi_of_s);
/// diag(e^{-(d-1)l}, e^l, ..., e^l).
SLMatrix D_l(int d, double l);

/// Rotation in the plane span(v, e_1) taking the unit vector v to e_1,
/// identity on the orthogonal complement. Singular at v = -e_1.
SLMatrix rotation_to_e1(const Vec& v);

/// Blocks of M = [A B; C D] and of u(s) M = [A(s) B(s); C D].
struct BlockDecomposition {
  Mat A, B, C, D;
  Mat A_s, B_s;
};

BlockDecomposition block_decompose(const FlowParams& p, const SLMatrix& M, const Mat& s);
/// phi(s) = A(s)^{-1} B(s); throws DegenerateError when A(s) is singular.
Mat phi_map(const FlowParams& p, const SLMatrix& M, const Mat& s);
/// (A s~ - B)(D - C s~)^{-1}, the inverse of phi_map.
Mat phi_inverse(const FlowParams& p, const SLMatrix& M, const Mat& s_tilde);

/// Sup-norm of a matrix (max absolute entry).
double sup_norm(const Mat& m);

}  // namespace latgeo::groups
