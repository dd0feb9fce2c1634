#include "latgeo/orbit.hpp"

#include <cmath>
#include <type_traits>

#include <boost/multiprecision/mpfr.hpp>

#include "detail/lll_core.hpp"
#include "latgeo/lattice.hpp"

namespace latgeo::orbit {

namespace {

using Mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<100>,
                                         boost::multiprecision::et_off>;

double canonical(double c) {
  double f = c - std::floor(c);
  return f >= 1.0 ? 0.0 : f;
}

// Solves a x = y for small dense systems by partial pivoting.
template <class Real>
std::vector<Real> solve(detail::Rows<Real> a, std::vector<Real> y) {
  using std::abs;
  const std::size_t n = y.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (abs(a[r][col]) > abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(y[col], y[piv]);
    if (a[col][col] == 0) throw NumericError("singular reduced basis");
    for (std::size_t r = col + 1; r < n; ++r) {
      const Real f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      y[r] -= f * y[col];
    }
  }
  std::vector<Real> x(n);
  for (std::size_t r = n; r-- > 0;) {
    Real acc = y[r];
    for (std::size_t c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

template <class Real>
ReducedPoint flow_impl(const groups::FlowParams& p, double T, const Mat& s, const Mat& phi) {
  using std::exp;
  using std::floor;
  const int d = p.d;
  const int k = static_cast<int>(phi.cols());
  const Real up = exp(Real(p.cols()) * Real(T));
  const Real down = exp(-Real(p.r) * Real(T));

  // Row-major g = a_T u(s).
  detail::Rows<Real> g(d, std::vector<Real>(d, Real(0)));
  for (int i = 0; i < d; ++i) {
    if (i < p.r) {
      g[i][i] = up;
      for (int j = 0; j < p.cols(); ++j) g[i][p.r + j] = up * Real(s(i, j));
    } else {
      g[i][i] = down;
    }
  }
  // Basis vectors are the columns of g.
  detail::Rows<Real> b(d, std::vector<Real>(d)), u(d, std::vector<Real>(d, Real(0)));
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) b[j][i] = g[i][j];
    u[j][j] = 1;
  }
  detail::LllCore<Real>(b, u).run(0.99);

  detail::Rows<Real> red(d, std::vector<Real>(d));  // row-major reduced matrix
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) red[i][j] = b[j][i];
  }
  Mat gd(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) gd(i, j) = static_cast<double>(red[i][j]);
  }
  Mat coords(d, k);
  for (int col = 0; col < k; ++col) {
    // v = g phi in Real, then coordinates against the well-conditioned
    // reduced basis.
    std::vector<Real> v(d, Real(0));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) v[i] += g[i][j] * Real(phi(j, col));
    }
    const std::vector<Real> c = solve(red, v);
    for (int i = 0; i < d; ++i) coords(i, col) = static_cast<double>(c[i] - floor(c[i]));
  }
  ReducedPoint rp = from_coordinates(gd, coords);
  rp.high_precision = !std::is_same_v<Real, double>;
  return rp;
}

}  // namespace

ReducedPoint from_coordinates(const Mat& g, const Mat& coords) {
  Mat basis = g;
  Mat c = coords;
  // Swaps during reduction may flip orientation; negating the last basis
  // vector keeps the basis reduced and restores det = +1.
  if (basis.determinant() < 0.0) {
    basis.col(basis.cols() - 1) *= -1.0;
    c.row(c.rows() - 1) *= -1.0;
  }
  for (int i = 0; i < c.rows(); ++i) {
    for (int j = 0; j < c.cols(); ++j) c(i, j) = canonical(c(i, j));
  }
  groups::SLMatrix sl = groups::SLMatrix::renormalized(basis);
  Mat v = sl.matrix() * c;
  return ReducedPoint{groups::GroupElement(std::move(sl), std::move(v)), std::move(c), false};
}

ReducedPoint flow_point(const groups::FlowParams& p, double T, const Mat& s, const Mat& phi_of_s) {
  if (s.rows() != p.r || s.cols() != p.cols()) throw InputError("s must be r x (d - r)");
  if (phi_of_s.rows() != p.d || phi_of_s.cols() < 1) throw InputError("phi(s) must be d x k");
  const double range = p.d * std::abs(T);
  if (!std::isfinite(range) || range > kMaxRange) {
    throw NumericError("flow time beyond the multiprecision range");
  }
  if (range <= kDoubleRange) return flow_impl<double>(p, T, s, phi_of_s);
  return flow_impl<Mp>(p, T, s, phi_of_s);
}

ReducedPoint reduce(const groups::GroupElement& x) {
  const lattice::LllResult r = lattice::lll_reduce(x.g.matrix());
  const Mat c = r.basis.partialPivLu().solve(x.v);
  return from_coordinates(r.basis, c);
}

}  // namespace latgeo::orbit
