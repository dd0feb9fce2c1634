#include "latgeo/region.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace latgeo {

namespace {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

}  // namespace

Region::Region(Box box) : base_(std::move(box)) {
  const Box& b = std::get<Box>(base_);
  if (b.lo.size() != b.hi.size() || b.lo.size() < 1) throw InputError("box bounds mismatch");
  transform_ = Mat::Identity(b.lo.size(), b.lo.size());
  inverse_ = transform_;
}

Region::Region(Ball ball) : base_(std::move(ball)) {
  const Ball& b = std::get<Ball>(base_);
  if (b.center.size() < 1) throw InputError("ball needs a center");
  if (!(b.radius >= 0.0)) throw InputError("ball radius must be non-negative");
  transform_ = Mat::Identity(b.center.size(), b.center.size());
  inverse_ = transform_;
}

bool Region::empty() const {
  if (const Box* b = std::get_if<Box>(&base_)) {
    return ((b->hi - b->lo).array() <= 0.0).any();
  }
  return std::get<Ball>(base_).radius <= 0.0;
}

bool Region::contains(const Vec& y) const {
  if (y.size() != dim()) throw InputError("region dimension mismatch");
  const Vec x = identity_ ? y : Vec(inverse_ * y);
  if (const Box* b = std::get_if<Box>(&base_)) {
    for (int i = 0; i < x.size(); ++i) {
      if (!(x(i) >= b->lo(i) && x(i) < b->hi(i))) return false;
    }
    return true;
  }
  const Ball& b = std::get<Ball>(base_);
  return (x - b.center).squaredNorm() < b.radius * b.radius;
}

double Region::volume() const {
  if (empty()) return 0.0;
  const double jac = identity_ ? 1.0 : std::abs(transform_.determinant());
  if (const Box* b = std::get_if<Box>(&base_)) {
    return jac * (b->hi - b->lo).prod();
  }
  const Ball& b = std::get<Ball>(base_);
  return jac * unit_ball_volume(dim()) * std::pow(b.radius, dim());
}

double Region::outer_radius() const {
  if (empty()) return 0.0;
  if (const Box* b = std::get_if<Box>(&base_)) {
    const int n = dim();
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      Vec corner(n);
      for (int i = 0; i < n; ++i) corner(i) = (mask >> i) & 1u ? b->hi(i) : b->lo(i);
      best = std::max(best, (transform_ * corner).norm());
    }
    return best;
  }
  const Ball& b = std::get<Ball>(base_);
  const double op_norm =
      identity_ ? 1.0 : Eigen::JacobiSVD<Mat>(transform_).singularValues()(0);
  return (transform_ * b.center).norm() + op_norm * b.radius;
}

Region Region::transformed(const Mat& m) const {
  if (m.rows() != dim() || m.cols() != dim()) throw InputError("transform dimension mismatch");
  const double det = m.determinant();
  if (!std::isfinite(det) || det == 0.0) throw DegenerateError("region transform is singular");
  Region out = *this;
  out.transform_ = m * transform_;
  out.inverse_ = out.transform_.inverse();
  out.identity_ = false;
  return out;
}

Region Region::scaled(double factor) const {
  return transformed(factor * Mat::Identity(dim(), dim()));
}

}  // namespace latgeo
