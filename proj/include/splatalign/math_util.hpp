// Small rotation / RNG helpers shared across the library.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

#include "splatalign/types.hpp"

namespace splatalign {

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

/// Rodrigues exponential map; series form near zero so it is smooth in
/// the squared angle (no sqrt at the origin).
inline Mat3 expmap(const Vec3& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  double a, b;  // sin(t)/t and (1-cos(t))/t^2
  if (theta2 < 1e-12) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 K = skew(axis_angle);
  return Mat3::Identity() + a * K + b * (K * K);
}

/// Geodesic angle between two rotations, in radians.  Uses the
/// Frobenius/asin form near zero where acos of the trace loses precision.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 rel = a.transpose() * b;
  const double c = (rel.trace() - 1.0) * 0.5;
  if (c > 0.9) {
    // ||R1 - R2||_F^2 = 8 sin^2(theta / 2)
    const double f = (a - b).norm() / (2.0 * std::numbers::sqrt2);
    return 2.0 * std::asin(std::min(1.0, f));
  }
  return std::acos(std::clamp(c, -1.0, 1.0));
}

/// Rotation angle of R itself (distance to identity).
inline double rotation_angle(const Mat3& r) {
  return rotation_angle_between(Mat3::Identity(), r);
}

/// Uniform random unit quaternion (4D Gaussian, normalized).
inline Quat random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d v;
  do {
    v << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
  } while (v.norm() < 1e-12);
  v.normalize();
  return Quat(v(0), v(1), v(2), v(3));
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  return random_unit_quaternion(rng).toRotationMatrix();
}

/// Rotation by `angle_rad` about a uniformly random axis.
inline Mat3 random_rotation_with_angle(std::mt19937_64& rng, double angle_rad) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 axis;
  do {
    axis << gauss(rng), gauss(rng), gauss(rng);
  } while (axis.norm() < 1e-12);
  axis.normalize();
  return Eigen::AngleAxisd(angle_rad, axis).toRotationMatrix();
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace splatalign
