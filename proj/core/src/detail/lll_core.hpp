#pragma once

// Scalar-generic LLL. Instantiated for double and for the multiprecision
// type used when evaluating far-flowed orbit points.

#include <cmath>
#include <cstddef>
#include <vector>

#include "latgeo/types.hpp"

namespace latgeo::detail {

template <class Real>
using Rows = std::vector<std::vector<Real>>;

template <class Real>
Real dot(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class Real>
class LllCore {
 public:
  // b: n row vectors (the basis vectors); u: n x n, tracks b = u * b_in.
  LllCore(Rows<Real>& b, Rows<Real>& u) : b_(b), u_(u), n_(b.size()) {
    mu_.assign(n_, std::vector<Real>(n_, Real(0)));
    bstar_.assign(n_, std::vector<Real>(b_.empty() ? 0 : b_[0].size(), Real(0)));
    norm_.assign(n_, Real(0));
  }

  void run(double delta, long max_steps = 1000000) {
    if (n_ < 2) {
      if (n_ == 1 && !(dot(b_[0], b_[0]) > 0)) throw InputError("singular basis");
      return;
    }
    gso();
    std::size_t k = 1;
    long steps = 0;
    while (k < n_) {
      if (++steps > max_steps) throw NumericError("LLL did not terminate");
      size_reduce(k);
      const Real lhs = norm_[k];
      const Real rhs = (Real(delta) - mu_[k][k - 1] * mu_[k][k - 1]) * norm_[k - 1];
      if (lhs >= rhs) {
        ++k;
      } else {
        std::swap(b_[k], b_[k - 1]);
        std::swap(u_[k], u_[k - 1]);
        gso();
        k = k > 1 ? k - 1 : 1;
      }
    }
  }

 private:
  void gso() {
    for (std::size_t i = 0; i < n_; ++i) gso_row(i);
  }

  void gso_row(std::size_t i) {
    bstar_[i] = b_[i];
    for (std::size_t j = 0; j < i; ++j) {
      mu_[i][j] = dot(b_[i], bstar_[j]) / norm_[j];
      for (std::size_t c = 0; c < bstar_[i].size(); ++c) bstar_[i][c] -= mu_[i][j] * bstar_[j][c];
    }
    norm_[i] = dot(bstar_[i], bstar_[i]);
    if (!(norm_[i] > 0)) throw InputError("singular basis");
  }

  void size_reduce(std::size_t k) {
    using std::abs;
    using std::round;
    // Large multipliers lose the incremental mu update; recompute and repeat.
    for (int pass = 0; pass < 64; ++pass) {
      bool large = false;
      for (std::size_t jj = k; jj-- > 0;) {
        const Real q = round(mu_[k][jj]);
        if (q == 0) continue;
        if (abs(q) > Real(1 << 20)) large = true;
        for (std::size_t c = 0; c < b_[k].size(); ++c) b_[k][c] -= q * b_[jj][c];
        for (std::size_t c = 0; c < n_; ++c) u_[k][c] -= q * u_[jj][c];
        for (std::size_t l = 0; l < jj; ++l) mu_[k][l] -= q * mu_[jj][l];
        mu_[k][jj] -= q;
      }
      if (!large) return;
      gso_row(k);
    }
    throw NumericError("size reduction did not converge");
  }

  Rows<Real>& b_;
  Rows<Real>& u_;
  std::size_t n_;
  Rows<Real> mu_;
  Rows<Real> bstar_;
  std::vector<Real> norm_;
};

}  // namespace latgeo::detail
