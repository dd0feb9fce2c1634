#pragma once

#include <variant>

#include "latgeo/types.hpp"

namespace latgeo {

/// Half-open axis box [lo, hi).
struct Box {
  Vec lo;
  Vec hi;
};

/// Open Euclidean ball.
struct Ball {
  Vec center;
  double radius = 0.0;
};

/// A box or ball, optionally pushed forward by an invertible linear map:
/// the point set is {M y : y in base}. Membership, volume and the outer
/// radius are exact for this family.
class Region {
 public:
  explicit Region(Box box);
  explicit Region(Ball ball);

  int dim() const { return static_cast<int>(transform_.rows()); }
  bool contains(const Vec& y) const;
  /// Lebesgue measure, |det M| times the base measure.
  double volume() const;
  /// sup of |y| over the closure; 0 for empty regions.
  double outer_radius() const;
  bool empty() const;

  /// Region M * this.
  Region transformed(const Mat& m) const;
  Region scaled(double factor) const;

  const std::variant<Box, Ball>& base() const { return base_; }
  const Mat& transform() const { return transform_; }

 private:
  std::variant<Box, Ball> base_;
  Mat transform_;
  Mat inverse_;
  bool identity_ = true;
};

}  // namespace latgeo
