#include "latgeo/groups.hpp"

#include <cmath>
#include <string>

namespace latgeo::groups {

namespace {

constexpr double kDetTolerance = 1e-9;
constexpr double kDriftTolerance = 1e-6;

void require_square(const Mat& m) {
  if (m.rows() != m.cols()) throw InputError("matrix is not square");
  if (m.rows() < 2 || m.rows() > kMaxGroupDim) {
    throw UnsupportedError("dimension " + std::to_string(m.rows()) +
                           " outside supported range 2..6");
  }
}

}  // namespace

FlowParams::FlowParams(int dim, int rank) : d(dim), r(rank) {
  if (d < 2 || d > kMaxGroupDim) {
    throw UnsupportedError("d must lie in 2..6, got " + std::to_string(d));
  }
  if (r < 1 || r > d - 1) {
    throw InputError("r must lie in 1..d-1, got " + std::to_string(r));
  }
}

SLMatrix::SLMatrix(Mat m) : m_(std::move(m)) {
  require_square(m_);
  const double det = m_.determinant();
  if (!std::isfinite(det) || std::abs(det - 1.0) > kDetTolerance) {
    throw InputError("determinant " + std::to_string(det) + " is not 1");
  }
}

SLMatrix SLMatrix::renormalized(Mat m) {
  require_square(m);
  const double det = m.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw InputError("cannot renormalize a matrix with non-positive determinant");
  }
  m /= std::pow(det, 1.0 / static_cast<double>(m.rows()));
  return SLMatrix(std::move(m));
}

SLMatrix SLMatrix::identity(int d) {
  return SLMatrix(Mat::Identity(d, d), Unchecked{});
}

SLMatrix SLMatrix::operator*(const SLMatrix& other) const {
  if (dim() != other.dim()) throw InputError("SL dimension mismatch");
  Mat prod = m_ * other.m_;
  const double det = prod.determinant();
  if (!std::isfinite(det) || std::abs(det - 1.0) > kDriftTolerance) {
    throw NumericError("determinant drift " + std::to_string(det - 1.0) +
                       " exceeds 1e-6");
  }
  return SLMatrix(std::move(prod), Unchecked{});
}

SLMatrix SLMatrix::inverse() const {
  return SLMatrix(m_.inverse(), Unchecked{});
}

SLMatrix make_diagonal(const Vec& diag) {
  Mat m = Mat::Zero(diag.size(), diag.size());
  for (int i = 0; i < diag.size(); ++i) m(i, i) = diag(i);
  require_square(m);
  return SLMatrix(std::move(m), SLMatrix::Unchecked{});
}

GroupElement::GroupElement(SLMatrix g_, Mat v_) : g(std::move(g_)), v(std::move(v_)) {
  if (v.rows() != g.dim()) throw InputError("translation block has wrong row count");
  if (v.cols() < 1) throw InputError("translation block needs k >= 1 columns");
}

GroupElement GroupElement::identity(int d, int k) {
  return GroupElement(SLMatrix::identity(d), Mat::Zero(d, k));
}

GroupElement multiply(const GroupElement& a, const GroupElement& b) {
  if (a.dim() != b.dim() || a.k() != b.k()) {
    throw InputError("group elements have incompatible (d, k)");
  }
  Mat v = a.v + a.g.matrix() * b.v;
  return GroupElement(a.g * b.g, std::move(v));
}

GroupElement inverse(const GroupElement& x) {
  SLMatrix ginv = x.g.inverse();
  Mat v = -(ginv.matrix() * x.v);
  return GroupElement(std::move(ginv), std::move(v));
}

GroupElement left_multiply(const SLMatrix& h, const GroupElement& x) {
  Mat v = h.matrix() * x.v;
  return GroupElement(h * x.g, std::move(v));
}

SLMatrix a_t(const FlowParams& p, double t) {
  Vec diag(p.d);
  const double up = std::exp(static_cast<double>(p.d - p.r) * t);
  const double down = std::exp(-static_cast<double>(p.r) * t);
  for (int i = 0; i < p.d; ++i) diag(i) = i < p.r ? up : down;
  return make_diagonal(diag);
}

SLMatrix u_of_s(const FlowParams& p, const Mat& s) {
  if (s.rows() != p.r || s.cols() != p.cols()) {
    throw InputError("s must be r x (d - r)");
  }
  Mat m = Mat::Identity(p.d, p.d);
  m.block(0, p.r, p.r, p.cols()) = s;
  return SLMatrix(std::move(m));
}

GroupElement u_phi(const FlowParams& p, const Mat& s, const Mat& phi_of_s) {
  SLMatrix u = u_of_s(p, s);
  if (phi_of_s.rows() != p.d) throw InputError("phi(s) must have d rows");
  Mat v = u.matrix() * phi_of_s;
  return GroupElement(std::move(u), std::move(v));
}

SLMatrix D_l(int d, double l) {
  if (d < 2 || d > kMaxGroupDim) throw UnsupportedError("d must lie in 2..6");
  Vec diag(d);
  diag(0) = std::exp(-static_cast<double>(d - 1) * l);
  for (int i = 1; i < d; ++i) diag(i) = std::exp(l);
  return make_diagonal(diag);
}

SLMatrix rotation_to_e1(const Vec& v) {
  const int d = static_cast<int>(v.size());
  if (std::abs(v.norm() - 1.0) > 1e-9) throw InputError("rotation_to_e1 needs a unit vector");
  Vec minus_e1 = Vec::Zero(d);
  minus_e1(0) = -1.0;
  if ((v - minus_e1).norm() <= 1e-6) {
    throw DegenerateError("vector within 1e-6 of the rotation singular point -e_1");
  }
  // K = e1 v^T - v e1^T generates the plane rotation; R = I + K + K^2 / (1 + c).
  const double c = v(0);
  Mat K = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    K(0, j) += v(j);
    K(j, 0) -= v(j);
  }
  Mat R = Mat::Identity(d, d) + K + (K * K) / (1.0 + c);
  return SLMatrix(std::move(R));
}

BlockDecomposition block_decompose(const FlowParams& p, const SLMatrix& M, const Mat& s) {
  if (M.dim() != p.d) throw InputError("M has wrong dimension");
  if (s.rows() != p.r || s.cols() != p.cols()) throw InputError("s must be r x (d - r)");
  const Mat& m = M.matrix();
  BlockDecomposition b;
  b.A = m.block(0, 0, p.r, p.r);
  b.B = m.block(0, p.r, p.r, p.cols());
  b.C = m.block(p.r, 0, p.cols(), p.r);
  b.D = m.block(p.r, p.r, p.cols(), p.cols());
  b.A_s = b.A + s * b.C;
  b.B_s = b.B + s * b.D;
  return b;
}

Mat phi_map(const FlowParams& p, const SLMatrix& M, const Mat& s) {
  BlockDecomposition b = block_decompose(p, M, s);
  const double scale = std::max(1.0, sup_norm(b.A_s));
  if (std::abs(b.A_s.determinant()) <= 1e-9 * std::pow(scale, p.r)) {
    throw DegenerateError("A(s) is singular");
  }
  return b.A_s.partialPivLu().solve(b.B_s);
}

Mat phi_inverse(const FlowParams& p, const SLMatrix& M, const Mat& s_tilde) {
  if (s_tilde.rows() != p.r || s_tilde.cols() != p.cols()) {
    throw InputError("s~ must be r x (d - r)");
  }
  BlockDecomposition b = block_decompose(p, M, Mat::Zero(p.r, p.cols()));
  Mat left = b.A * s_tilde - b.B;
  Mat right = b.D - b.C * s_tilde;
  const double scale = std::max(1.0, sup_norm(right));
  if (std::abs(right.determinant()) <= 1e-9 * std::pow(scale, p.cols())) {
    throw DegenerateError("D - C s~ is singular");
  }
  // X right = left  <=>  right^T X^T = left^T
  Mat xt = right.transpose().partialPivLu().solve(left.transpose());
  return xt.transpose();
}

double sup_norm(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace latgeo::groups
