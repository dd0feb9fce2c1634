#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "latgeo/funcspec.hpp"
#include "latgeo/region.hpp"
#include "latgeo/types.hpp"

namespace latgeo::torus {

using funcspec::FuncFamily;
using funcspec::ParamBox;

/// Omega_j(s): a box [lo(s), hi(s)) or a ball B(center(s), radius(s)) in
/// R^{d-1}, the bounds given as families of s.
class RegionFamily {
 public:
  static RegionFamily box(FuncFamily lo, FuncFamily hi);
  static RegionFamily ball(FuncFamily center, FuncFamily radius);

  bool is_box() const { return is_box_; }
  int dim() const { return a_.rows(); }
  Region evaluate(const Vec& s) const;
  const FuncFamily& first() const { return a_; }
  const FuncFamily& second() const { return b_; }

 private:
  RegionFamily(bool is_box, FuncFamily a, FuncFamily b);
  bool is_box_;
  FuncFamily a_;
  FuncFamily b_;
};

/// Linear flow theta(s) + t f(s) on T^d against k targets
/// phi_j(s) + e^{-l} R_{u_j(s)}^{-1} (0, Omega_j(s)).
struct Scene {
  int d = 2;
  int k = 1;
  ParamBox U;
  FuncFamily theta;
  FuncFamily f;                 // unit-normalized on evaluation
  std::vector<FuncFamily> u;    // unit-normalized on evaluation
  std::vector<FuncFamily> phi;
  std::vector<RegionFamily> omega;

  /// Shapes and dimension limits; throws InputError.
  void validate() const;
};

/// A scene evaluated at one parameter s.
struct SceneAt {
  Vec theta;
  Vec f;
  std::vector<Vec> u;
  std::vector<Vec> phi;
  std::vector<Region> omega;
  std::vector<Mat> rot;       // R_{u_j}
  std::vector<double> uf;     // u_j . f
};

/// Throws DegenerateError when some u_j . f <= 1e-9 or u_j is within 1e-6
/// of the rotation singular point.
SceneAt evaluate(const Scene& scene, const Vec& s);

/// 1 / sum_j |Omega_j(s)| u_j(s) . f(s).
double mean_return_sigma(const Scene& scene, const Vec& s);
/// Lower-right (d-1) x (d-1) block of R_f R_{u_j}^{-1}.
Mat tilde_R(const Scene& scene, const Vec& s, int j);
/// sigma^{1/(d-1)} tilde_R_j Omega_j(s).
Region tilde_Omega(const Scene& scene, const Vec& s, int j);

struct HitEvent {
  double t_abs = 0.0;
  int j = 0;
  Vec x_local;
  IVec kvec;
};

struct HitSeries {
  std::vector<HitEvent> events;  // sorted by time, simultaneous hits by j
};

inline constexpr std::size_t kMaxEvents = 10'000'000;

/// Exact enumeration of hitting times in (0, t_max] via the closed-form
/// crossing time of each candidate translate k.
HitSeries hit_times(const Scene& scene, const Vec& s, double l, double t_max);
/// Time-stepping oracle: marches with step e^{-l} / (8 |f|), detects sign
/// changes of the first rotated coordinate and bisects.
HitSeries hit_times_oracle(const Scene& scene, const Vec& s, double l, double t_max);

/// t_n / (e^{(d-1) l} sigma(s)).
std::vector<double> normalized_times(const HitSeries& series, const Scene& scene, const Vec& s,
                                     double l);

/// Integer q != 0 with |q|_inf <= H and |q . f| < 1e-10 |q|, if any; the
/// shortest one found, sign-normalized so its first nonzero entry is positive.
std::optional<IVec> rational_relation_witness(const Vec& f, std::int64_t H);

}  // namespace latgeo::torus
