#pragma once

#include <Eigen/Core>

#include "illum/error.hpp"

namespace illum {

/// Linear RGB response of a light source. Only the direction is meaningful;
/// magnitude carries exposure/gain and is discarded by every consumer.
class IlluminantVec {
 public:
  IlluminantVec() = default;
  IlluminantVec(double r, double g, double b) : v_(r, g, b) {}
  explicit IlluminantVec(const Eigen::Vector3d& v) : v_(v) {}

  double r() const { return v_[0]; }
  double g() const { return v_[1]; }
  double b() const { return v_[2]; }
  double operator[](int i) const { return v_[i]; }

  const Eigen::Vector3d& vec() const { return v_; }

  bool is_finite() const { return v_.allFinite(); }

  friend bool operator==(const IlluminantVec& a, const IlluminantVec& b) { return a.v_ == b.v_; }

 private:
  Eigen::Vector3d v_ = Eigen::Vector3d::Zero();
};

/// (R, G) / (R + G + B): the scale-free 2D encoding of a ray.
struct Chromaticity2D {
  double u1 = 0.0;
  double u2 = 0.0;
};

struct AngleDeg {
  double value = 0.0;
};

inline bool operator<(AngleDeg a, AngleDeg b) { return a.value < b.value; }

/// Unit-Euclidean-norm representative of the ray through v.
/// Throws ZeroVector when |v| < 1e-15 or v has non-finite entries.
IlluminantVec normalize(const IlluminantVec& v);

/// Recovery angular error in degrees. Symmetric and scale-invariant.
AngleDeg angular_error(const IlluminantVec& a, const IlluminantVec& b);

/// Same as angular_error but with raw Eigen vectors, for internal hot loops.
double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

Chromaticity2D to_chromaticity(const IlluminantVec& v);

/// Returns (u1, u2, 1 - u1 - u2). Not normalized.
IlluminantVec from_chromaticity(const Chromaticity2D& c);

}  // namespace illum
