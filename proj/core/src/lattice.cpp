#include "latgeo/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "detail/lll_core.hpp"
#include "latgeo/random.hpp"

namespace latgeo::lattice {

namespace {

constexpr double kUnimodularTolerance = 1e-8;
constexpr double kTieRelative = 1e-12;

void require_dim(int d) {
  if (d < 1 || d > 6) throw UnsupportedError("lattice dimension must lie in 1..6");
}

std::int64_t to_int(double x) {
  if (!(std::abs(x) < 9.0e15)) throw NumericError("integer coefficient exceeds 2^53");
  return static_cast<std::int64_t>(std::llround(x));
}

bool lex_less(const IVec& a, const IVec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Fincke-Pohst enumeration of integer x with |B (x - y)|^2 <= bound, the
// bound being re-read on every step so visitors may shrink it.
class Enumerator {
 public:
  explicit Enumerator(const Mat& basis) : n_(static_cast<int>(basis.cols())) {
    mu_ = Mat::Zero(n_, n_);
    bsq_ = Vec::Zero(n_);
    Mat bstar = basis;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < i; ++j) {
        mu_(i, j) = basis.col(i).dot(bstar.col(j)) / bsq_(j);
        bstar.col(i) -= mu_(i, j) * bstar.col(j);
      }
      bsq_(i) = bstar.col(i).squaredNorm();
      if (!(bsq_(i) > 0.0)) throw InputError("singular basis");
    }
  }

  template <class Visit>
  /// nearest_only: at the bottom level visit just the integers next to the
  /// projected centre. For a fixed prefix the distance is convex in x_0, so
  /// the others are never minimal; this keeps SVP/CVP linear in the skew.
  void run(const Vec& y, double& bound, Visit&& visit, std::uint64_t budget,
           bool nearest_only = false) {
    y_ = y;
    nearest_only_ = nearest_only;
    x_ = Vec::Zero(n_);
    nodes_ = 0;
    budget_ = budget;
    recurse(n_ - 1, 0.0, bound, visit);
  }

 private:
  template <class Visit>
  void recurse(int i, double partial, double& bound, Visit& visit) {
    double c = y_(i);
    for (int j = i + 1; j < n_; ++j) c -= mu_(j, i) * (x_(j) - y_(j));
    const double rem = bound - partial;
    if (rem < 0.0) return;
    const double w = std::sqrt(rem / bsq_(i));
    double lo = std::ceil(c - w);
    double hi = std::floor(c + w);
    if (i == 0 && nearest_only_) {
      lo = std::max(lo, std::floor(c) - 1.0);
      hi = std::min(hi, std::ceil(c) + 1.0);
    }
    for (double xi = lo; xi <= hi; xi += 1.0) {
      if (++nodes_ > budget_) throw BudgetError("lattice enumeration budget exceeded");
      const double diff = xi - c;
      const double p = partial + bsq_(i) * diff * diff;
      if (p > bound) continue;
      x_(i) = xi;
      if (i == 0) {
        visit(x_);
      } else {
        recurse(i - 1, p, bound, visit);
      }
    }
  }

  int n_;
  Mat mu_;
  Vec bsq_;
  Vec y_;
  Vec x_;
  std::uint64_t nodes_ = 0;
  std::uint64_t budget_ = 0;
  bool nearest_only_ = false;
};

struct Reduced {
  Mat basis;
  Mat transform;  // real copy of the integer transform
};

Reduced reduce(const Mat& basis) {
  LllResult r = lll_reduce(basis);
  return {r.basis, r.transform.cast<double>()};
}

IVec to_ivec(const Vec& v) {
  IVec out(v.size());
  for (int i = 0; i < v.size(); ++i) out(i) = to_int(v(i));
  return out;
}

// Shared SVP/CVP driver: target == nullptr selects SVP.
LatticeVector solve(const Mat& basis, const Vec* target) {
  if (basis.rows() != basis.cols()) throw InputError("basis must be square");
  if (basis.rows() < 1 || basis.rows() > kMaxDim) throw UnsupportedError("dimension too large");
  const Reduced red = reduce(basis);
  const int n = static_cast<int>(basis.cols());
  Enumerator en(red.basis);
  const Mat inv = red.basis.inverse();

  Vec y = Vec::Zero(n);
  double best;
  if (target) {
    y = inv * *target;
    Vec x0(n);
    for (int i = 0; i < n; ++i) x0(i) = std::round(y(i));
    best = (*target - red.basis * x0).squaredNorm();
  } else {
    best = red.basis.colwise().squaredNorm().minCoeff();
  }
  // Absolute slack: an exact hit (distance 0) still carries round-off of
  // order 1e-16 times the coordinate scale.
  double scale2 = red.basis.colwise().squaredNorm().maxCoeff();
  if (target) scale2 = std::max(scale2, target->squaredNorm());
  const double slack = 1e-26 * scale2 + 1e-300;
  double bound = best * (1.0 + 1e-9) + slack;

  struct Candidate {
    double dist2;
    Vec x;
  };
  std::vector<Candidate> cands;
  auto visit = [&](const Vec& x) {
    double dist2;
    if (target) {
      dist2 = (*target - red.basis * x).squaredNorm();
    } else {
      if (x.isZero()) return;
      dist2 = (red.basis * x).squaredNorm();
    }
    if (dist2 > bound) return;
    cands.push_back({dist2, x});
    if (dist2 < best) {
      best = dist2;
      bound = best * (1.0 + 1e-9) + slack;
    }
  };
  en.run(y, bound, visit, kEnumerationBudget, true);
  if (cands.empty()) throw NumericError("enumeration found no candidate");

  LatticeVector out;
  bool have = false;
  for (const Candidate& c : cands) {
    if (c.dist2 > best * (1.0 + kTieRelative) + slack) continue;
    IVec coeffs = to_ivec(red.transform * c.x);
    if (!have || lex_less(coeffs, out.coeffs)) {
      out.coeffs = coeffs;
      out.point = red.basis * c.x;
      out.length = std::sqrt(c.dist2);
      have = true;
    }
  }
  return out;
}

// Fraction-free (Bareiss) determinant of a small integer matrix.
__int128 int_det(std::vector<std::vector<__int128>> a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  __int128 sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[k], a[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      }
    }
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

std::int64_t gcd_of_minors(const IMat& g) {
  const int d = static_cast<int>(g.rows());
  const int i = static_cast<int>(g.cols());
  std::int64_t acc = 0;
  std::vector<int> rows(i);
  std::iota(rows.begin(), rows.end(), 0);
  while (true) {
    std::vector<std::vector<__int128>> m(i, std::vector<__int128>(i));
    for (int a = 0; a < i; ++a) {
      for (int b = 0; b < i; ++b) m[a][b] = g(rows[a], b);
    }
    __int128 det = int_det(m);
    if (det < 0) det = -det;
    if (det > static_cast<__int128>(INT64_MAX)) throw NumericError("minor overflows int64");
    acc = std::gcd(acc, static_cast<std::int64_t>(det));
    int pos = i - 1;
    while (pos >= 0 && rows[pos] == d - i + pos) --pos;
    if (pos < 0) break;
    ++rows[pos];
    for (int q = pos + 1; q < i; ++q) rows[q] = rows[q - 1] + 1;
  }
  return acc;
}

// Saturated basis of {x in Z^n : A x = 0} by unimodular column reduction.
IMat integer_kernel(const IMat& a) {
  const int rows = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  std::vector<std::vector<__int128>> m(rows, std::vector<__int128>(n));
  std::vector<std::vector<__int128>> u(n, std::vector<__int128>(n, 0));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) m[r][c] = a(r, c);
  }
  for (int c = 0; c < n; ++c) u[c][c] = 1;
  auto col_op = [&](int dst, int src, __int128 q) {  // col dst -= q * col src
    for (int r = 0; r < rows; ++r) m[r][dst] -= q * m[r][src];
    for (int r = 0; r < n; ++r) u[r][dst] -= q * u[r][src];
  };
  auto col_swap = [&](int x, int y) {
    for (int r = 0; r < rows; ++r) std::swap(m[r][x], m[r][y]);
    for (int r = 0; r < n; ++r) std::swap(u[r][x], u[r][y]);
  };
  int pivot = 0;
  for (int r = 0; r < rows && pivot < n; ++r) {
    // Euclid across columns pivot..n-1 on row r.
    while (true) {
      int best = -1;
      for (int c = pivot; c < n; ++c) {
        if (m[r][c] != 0 && (best < 0 || (m[r][c] < 0 ? -m[r][c] : m[r][c]) <
                                               (m[r][best] < 0 ? -m[r][best] : m[r][best]))) {
          best = c;
        }
      }
      if (best < 0) break;
      col_swap(pivot, best);
      bool done = true;
      for (int c = pivot + 1; c < n; ++c) {
        if (m[r][c] != 0) {
          col_op(c, pivot, m[r][c] / m[r][pivot]);
          if (m[r][c] != 0) done = false;
        }
      }
      if (done) {
        ++pivot;
        break;
      }
    }
  }
  IMat ker(n, n - pivot);
  for (int c = pivot; c < n; ++c) {
    for (int r = 0; r < n; ++r) ker(r, c - pivot) = static_cast<std::int64_t>(u[r][c]);
  }
  return ker;
}

std::vector<std::pair<int, int>> pairs_of(int d) {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) out.emplace_back(a, b);
  }
  return out;
}

// Grassmann-Plucker relations for 2-vectors.
bool decomposable2(const std::vector<__int128>& p, int d) {
  auto idx = [d](int a, int b) {
    int pos = 0;
    for (int x = 0; x < a; ++x) pos += d - 1 - x;
    return pos + (b - a - 1);
  };
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      for (int c = b + 1; c < d; ++c) {
        for (int e = c + 1; e < d; ++e) {
          const __int128 rel = p[idx(a, b)] * p[idx(c, e)] - p[idx(a, c)] * p[idx(b, e)] +
                               p[idx(a, e)] * p[idx(b, c)];
          if (rel != 0) return false;
        }
      }
    }
  }
  return true;
}

AlphaResult alpha_via_dual(const UnimodularLattice& lat) {
  const int d = lat.dim();
  const Mat dual = lat.basis().inverse().transpose();
  LatticeVector w = shortest_vector(dual);
  IMat row(1, d);
  for (int c = 0; c < d; ++c) row(0, c) = w.coeffs(c);
  AlphaResult res;
  res.best = integer_kernel(row);
  res.covolume = subspace_covolume(lat, RationalSubspace(res.best));
  res.alpha = 1.0 / res.covolume;
  return res;
}

AlphaResult alpha_planes(const UnimodularLattice& lat, std::uint64_t budget) {
  const int d = lat.dim();
  const auto pairs = pairs_of(d);
  const int n = static_cast<int>(pairs.size());
  const Mat& b = lat.basis();
  // Column I of the wedge basis is b_{I0} ^ b_{I1} in the e_J ^ e_K basis.
  Mat wedge(n, n);
  for (int col = 0; col < n; ++col) {
    const auto [i0, i1] = pairs[col];
    for (int row = 0; row < n; ++row) {
      const auto [j, k] = pairs[row];
      wedge(row, col) = b(j, i0) * b(k, i1) - b(k, i0) * b(j, i1);
    }
  }
  const Reduced red = reduce(wedge);
  Enumerator en(red.basis);

  // Initial bound: the plane of the two shortest reduced lattice vectors.
  const LllResult lr = lll_reduce(b);
  IMat start(d, 2);
  start.col(0) = lr.transform.col(0);
  start.col(1) = lr.transform.col(1);
  double best = std::pow(subspace_covolume(lat, RationalSubspace(start)), 2);
  double bound = best * (1.0 + 1e-9);
  std::vector<__int128> best_p;

  std::vector<__int128> p(n);
  auto visit = [&](const Vec& x) {
    if (x.isZero()) return;
    const double dist2 = (red.basis * x).squaredNorm();
    if (dist2 > bound) return;
    const Vec coeff = red.transform * x;
    for (int q = 0; q < n; ++q) p[q] = to_int(coeff(q));
    if (!decomposable2(p, d)) return;
    if (best_p.empty() || dist2 < best) {
      best = std::min(best, dist2);
      best_p = p;
      bound = best * (1.0 + 1e-9);
    }
  };
  en.run(Vec::Zero(n), bound, visit, budget);
  if (best_p.empty()) throw NumericError("plane enumeration found no decomposable vector");

  // The plane is the column space of the antisymmetric matrix of p.
  IMat anti = IMat::Zero(d, d);
  for (int q = 0; q < n; ++q) {
    const auto [j, k] = pairs[q];
    anti(j, k) = static_cast<std::int64_t>(best_p[q]);
    anti(k, j) = -static_cast<std::int64_t>(best_p[q]);
  }
  const IMat perp = integer_kernel(anti.transpose());
  AlphaResult res;
  res.best = integer_kernel(perp.transpose());
  res.covolume = subspace_covolume(lat, RationalSubspace(res.best));
  res.alpha = 1.0 / res.covolume;
  return res;
}

}  // namespace

UnimodularLattice::UnimodularLattice(Mat basis) : basis_(std::move(basis)) {
  if (basis_.rows() != basis_.cols()) throw InputError("lattice basis must be square");
  require_dim(static_cast<int>(basis_.rows()));
  const double det = basis_.determinant();
  if (!std::isfinite(det) || std::abs(std::abs(det) - 1.0) > kUnimodularTolerance) {
    throw InputError("lattice basis is not unimodular");
  }
}

AffineGrid::AffineGrid(UnimodularLattice lat, Mat coords, bool)
    : lat_(std::move(lat)), coords_(std::move(coords)) {
  if (coords_.rows() != lat_.dim() || coords_.cols() < 1) throw InputError("offset shape mismatch");
  for (int i = 0; i < coords_.rows(); ++i) {
    for (int j = 0; j < coords_.cols(); ++j) {
      double c = coords_(i, j) - std::floor(coords_(i, j));
      if (c >= 1.0) c = 0.0;
      coords_(i, j) = c;
    }
  }
}

AffineGrid::AffineGrid(UnimodularLattice lat, const Mat& offsets)
    : AffineGrid(lat, Mat(lat.basis().partialPivLu().solve(offsets)), true) {}

AffineGrid AffineGrid::from_coordinates(UnimodularLattice lat, const Mat& coords) {
  return AffineGrid(std::move(lat), coords, true);
}

RationalSubspace::RationalSubspace(IMat gens) : gens_(std::move(gens)) {
  if (gens_.cols() == 0) return;
  if (gens_.cols() > gens_.rows()) throw InputError("more generators than the ambient dimension");
  const std::int64_t g = gcd_of_minors(gens_);
  if (g == 0) throw InputError("generators are linearly dependent");
  if (g != 1) throw InputError("generators are not primitive");
}

RationalSubspace RationalSubspace::zero(int d) { return RationalSubspace(IMat(d, 0), true); }

LllResult lll_reduce(const Mat& basis, double delta) {
  const int n = static_cast<int>(basis.cols());
  const int m = static_cast<int>(basis.rows());
  if (n < 1 || n > m) throw InputError("basis must have 1..rows columns");
  detail::Rows<double> b(n, std::vector<double>(m));
  detail::Rows<double> u(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < m; ++r) b[i][r] = basis(r, i);
    u[i][i] = 1.0;
  }
  detail::LllCore<double>(b, u).run(delta);
  LllResult out;
  out.basis = Mat(m, n);
  out.transform = IMat(n, n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < m; ++r) out.basis(r, i) = b[i][r];
    for (int c = 0; c < n; ++c) out.transform(c, i) = to_int(u[i][c]);
  }
  // Recompute from the exact transform so basis == input * transform holds.
  out.basis = basis * out.transform.cast<double>();
  return out;
}

LatticeVector shortest_vector(const Mat& basis) { return solve(basis, nullptr); }
LatticeVector shortest_vector(const UnimodularLattice& lat) { return solve(lat.basis(), nullptr); }

LatticeVector closest_vector(const Mat& basis, const Vec& target) {
  if (target.size() != basis.rows()) throw InputError("target dimension mismatch");
  return solve(basis, &target);
}

LatticeVector closest_vector(const UnimodularLattice& lat, const Vec& target) {
  return closest_vector(lat.basis(), target);
}

double first_minimum(const Mat& basis) { return shortest_vector(basis).length; }

void for_each_point_in_ball(const Mat& basis, const Vec& offset, const Vec& center, double radius,
                            const std::function<void(const Vec&, const Vec&)>& visit,
                            std::uint64_t budget) {
  if (radius <= 0.0) return;
  const Reduced red = reduce(basis);
  Enumerator en(red.basis);
  const Vec y = red.basis.colPivHouseholderQr().solve(Vec(center - offset));
  const double r2 = radius * radius;
  double bound = r2 * (1.0 + 1e-9);
  en.run(
      y, bound,
      [&](const Vec& x) {
        const Vec p = red.basis * x + offset;
        if ((p - center).squaredNorm() <= r2) visit(p, red.transform * x);
      },
      budget);
}

double subspace_covolume(const UnimodularLattice& lat, const RationalSubspace& sub) {
  if (sub.ambient() != lat.dim()) throw InputError("subspace dimension mismatch");
  if (sub.dim() == 0) return 1.0;
  const Mat g = lat.basis() * sub.gens().cast<double>();
  const double gram = (g.transpose() * g).determinant();
  return std::sqrt(std::max(gram, 0.0));
}

AlphaResult alpha_i(const UnimodularLattice& lat, int i, std::uint64_t budget) {
  const int d = lat.dim();
  if (i < 0 || i > d) throw InputError("alpha_i needs 0 <= i <= d");
  AlphaResult res;
  if (i == 0) {
    res.best = IMat(d, 0);
    return res;
  }
  if (i == d) {
    res.best = IMat::Identity(d, d);
    return res;
  }
  if (i == 1) {
    LatticeVector v = shortest_vector(lat);
    res.best = v.coeffs;
    res.covolume = v.length;
    res.alpha = 1.0 / v.length;
    return res;
  }
  if (i == d - 1) return alpha_via_dual(lat);
  if (d > 4) throw UnsupportedError("alpha_i for 1 < i < d-1 needs d <= 4");
  return alpha_planes(lat, budget);
}

double margulis_alpha_tilde(const UnimodularLattice& lat, double eps, double nu) {
  const int d = lat.dim();
  if (!(eps > 0.0 && eps <= 0.1)) throw InputError("eps must lie in (0, 0.1]");
  if (!(nu > 0.0 && nu < 1.0)) throw InputError("nu must lie in (0, 1)");
  if (d > 4) throw UnsupportedError("margulis height needs d <= 4");
  const int q1 = d - 1;
  // The i = 1 term has weight exactly 1; accumulating the rest onto it keeps
  // alpha_1^nu <= result exact in floating point.
  double sum = std::pow(alpha_i(lat, 1).alpha, nu);
  for (int i = 0; i <= d; ++i) {
    if (i == 1) continue;
    const int q = i * (d - i);
    sum += std::pow(eps, q - q1) * std::pow(alpha_i(lat, i).alpha, nu);
  }
  return sum;
}

double default_nu(int r, int d) {
  if (r < 1 || r >= d) throw InputError("default_nu needs 1 <= r < d");
  return std::min(0.9 / static_cast<double>(r * (d - r)), 0.25);
}

UnimodularLattice sample_haar_sl2(std::mt19937_64& rng) {
  const double h = std::sqrt(3.0) / 2.0;
  double x, y;
  do {
    x = uniform01(rng) - 0.5;
    y = h / (1.0 - uniform01(rng));
  } while (x * x + y * y < 1.0);
  const double theta = std::numbers::pi * uniform01(rng);
  const double s = 1.0 / std::sqrt(y);
  Mat shape(2, 2);
  shape << s, s * x, 0.0, s * y;
  Mat rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return UnimodularLattice(rot * shape);
}

std::int64_t count_points_in_region(const AffineGrid& grid, int j, const CylinderRegion& region,
                                    std::uint64_t budget) {
  const int d = grid.lattice().dim();
  if (j < 0 || j >= grid.k()) throw InputError("grid index out of range");
  if (region.cross.dim() != d - 1) throw InputError("cross-section dimension mismatch");
  if (!std::isfinite(region.T)) throw InputError("unbounded region");
  if (region.T <= 0.0 || region.cross.empty()) return 0;
  const double outer = region.cross.outer_radius();
  if (!std::isfinite(outer)) throw InputError("unbounded region");

  const Reduced red = reduce(grid.lattice().basis());
  const Mat inv = red.basis.inverse();
  const Vec offset = grid.offset(j);
  Vec center = Vec::Zero(d);
  center(0) = region.T / 2.0;
  const double radius = std::sqrt(center(0) * center(0) + outer * outer) * (1.0 + 1e-12);
  const Vec y = inv * (center - offset);

  // Coefficient box from the dual rows: |z_i - y_i| <= radius * |row_i(B^-1)|.
  IVec lo(d), hi(d);
  double total = 1.0;
  for (int i = 0; i < d; ++i) {
    const double w = radius * inv.row(i).norm();
    lo(i) = to_int(std::ceil(y(i) - w));
    hi(i) = to_int(std::floor(y(i) + w));
    if (hi(i) < lo(i)) return 0;
    total *= static_cast<double>(hi(i) - lo(i) + 1);
  }
  if (total > static_cast<double>(budget)) throw BudgetError("region count budget exceeded");

  std::int64_t count = 0;
  IVec z = lo;
  Vec perp(d - 1);
  while (true) {
    const Vec p = red.basis * z.cast<double>() + offset;
    if (p(0) > 0.0 && p(0) < region.T) {
      for (int i = 1; i < d; ++i) perp(i - 1) = -p(i);
      if (region.cross.contains(perp)) ++count;
    }
    int pos = 0;
    while (pos < d && z(pos) == hi(pos)) {
      z(pos) = lo(pos);
      ++pos;
    }
    if (pos == d) break;
    ++z(pos);
  }
  return count;
}

}  // namespace latgeo::lattice
