// splatalign - Gaussian-splat object alignment and refinement
//
// Core domain types: Gaussian primitives, splat clouds, cameras and the
// transform families used by the alignment stack.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace splatalign {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Thrown when a value violates a documented precondition.
class invalid_argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when input geometry is too degenerate for the requested operation.
class degenerate_geometry_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on malformed files (bad header, missing property, non-finite data).
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_rotation_matrix(const Mat3& R, double tol = 1e-6) {
  return (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

/// One anisotropic 3D Gaussian with opacity and per-channel SH appearance.
///
/// The covariance is kept factored as rotation + per-axis standard
/// deviations: Sigma = R diag(scale)^2 R^T.  `sh` is a 3 x (L+1)^2 matrix,
/// row = color channel, column 0 = DC term.
struct GaussianPrimitive {
  Vec3 mean = Vec3::Zero();
  Quat rotation = Quat::Identity();  // unit norm
  Vec3 scale = Vec3::Ones();         // per-axis std-dev, > 0
  double opacity = 0.5;              // in (0,1)
  Eigen::Matrix<double, 3, Eigen::Dynamic> sh;

  Mat3 covariance() const {
    Mat3 R = rotation.toRotationMatrix();
    return R * scale.cwiseProduct(scale).asDiagonal() * R.transpose();
  }
};

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// Ordered collection of Gaussian primitives sharing one SH degree.
///
/// Clouds are treated as immutable values by all operations in this
/// library: transforms return new clouds, readers never mutate.
struct SplatCloud {
  std::vector<GaussianPrimitive> primitives;
  int sh_degree = 0;  // in [0,3]

  std::size_t size() const { return primitives.size(); }
  bool empty() const { return primitives.empty(); }

  std::vector<Vec3> means() const {
    std::vector<Vec3> out;
    out.reserve(primitives.size());
    for (const auto& p : primitives) out.push_back(p.mean);
    return out;
  }

  /// Checks the per-primitive invariants; throws on the first violation.
  void validate() const {
    if (sh_degree < 0 || sh_degree > 3)
      throw invalid_argument_error("SplatCloud: sh_degree must be in [0,3]");
    const int n_coeff = sh_coeff_count(sh_degree);
    for (std::size_t i = 0; i < primitives.size(); ++i) {
      const auto& p = primitives[i];
      if (std::abs(p.rotation.norm() - 1.0) > 1e-9)
        throw invalid_argument_error("primitive " + std::to_string(i) +
                                     ": quaternion not unit norm");
      if (!(p.scale.array() > 0.0).all())
        throw invalid_argument_error("primitive " + std::to_string(i) +
                                     ": non-positive scale");
      if (!(p.opacity > 0.0 && p.opacity < 1.0))
        throw invalid_argument_error("primitive " + std::to_string(i) +
                                     ": opacity outside (0,1)");
      if (p.sh.cols() != n_coeff)
        throw invalid_argument_error("primitive " + std::to_string(i) +
                                     ": expected " + std::to_string(n_coeff) +
                                     " SH coefficients per channel");
    }
  }
};

/// Pinhole camera, world-to-camera convention X_cam = R * X_world + t.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 world_to_camera(const Vec3& p) const { return rotation * p + translation; }
  Vec3 camera_to_world(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }
  /// Camera center in world coordinates.
  Vec3 center() const { return -(rotation.transpose() * translation); }
  /// Viewing direction (+z of the camera frame) in world coordinates.
  Vec3 view_direction() const { return rotation.transpose() * Vec3::UnitZ(); }

  /// Projects a world point to continuous pixel coordinates; z is the
  /// camera-space depth (may be negative for points behind the camera).
  Vec2 project(const Vec3& world, double* z_out = nullptr) const {
    Vec3 pc = world_to_camera(world);
    if (z_out) *z_out = pc.z();
    return {fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy};
  }

  void validate() const {
    if (!(fx > 0 && fy > 0)) throw invalid_argument_error("Camera: fx, fy must be > 0");
    if (width <= 0 || height <= 0)
      throw invalid_argument_error("Camera: non-positive image size");
    if (!(cx >= 0 && cx <= width && cy >= 0 && cy <= height))
      throw invalid_argument_error("Camera: principal point outside image bounds");
    if (!is_rotation_matrix(rotation))
      throw invalid_argument_error("Camera: extrinsic rotation not in SO(3)");
  }
};

/// 7-DOF similarity: p -> scale * rotation * p + translation.
struct SimilarityTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.rotation = rotation.transpose();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
  }

  void validate() const {
    if (!is_rotation_matrix(rotation))
      throw invalid_argument_error("SimilarityTransform: rotation not in SO(3)");
    if (!(scale > 0)) throw invalid_argument_error("SimilarityTransform: scale <= 0");
  }
};

/// Anisotropic alignment: p -> R * R'^T * diag(S) * R' * p + t.
///
/// The per-axis scale S acts inside the orthogonal frame R', so the family
/// contains similarities (S isotropic, R' = I) and axis-aligned stretches.
struct AnisotropicTransform {
  Mat3 rotation = Mat3::Identity();   // R
  Vec3 translation = Vec3::Zero();    // t
  Vec3 scale = Vec3::Ones();          // S, componentwise > 0
  Mat3 frame = Mat3::Identity();      // R'

  /// Full linear part R * R'^T * diag(S) * R'.
  Mat3 linear() const {
    return rotation * frame.transpose() * scale.asDiagonal() * frame;
  }

  Vec3 apply(const Vec3& p) const { return linear() * p + translation; }

  /// The inverse is again of this form: the linear part factors as
  /// R^T * (R R'^T diag(1/S) R' R^T).
  AnisotropicTransform inverse() const {
    AnisotropicTransform inv;
    inv.rotation = rotation.transpose();
    inv.frame = frame * rotation.transpose();
    inv.scale = scale.cwiseInverse();
    inv.translation = -(inv.linear() * translation);
    return inv;
  }

  static AnisotropicTransform from_similarity(const SimilarityTransform& s) {
    AnisotropicTransform t;
    t.rotation = s.rotation;
    t.translation = s.translation;
    t.scale = Vec3::Constant(s.scale);
    return t;
  }

  void validate() const {
    if (!is_rotation_matrix(rotation) || !is_rotation_matrix(frame))
      throw invalid_argument_error("AnisotropicTransform: rotation/frame not in SO(3)");
    if (!(scale.array() > 0.0).all())
      throw invalid_argument_error("AnisotropicTransform: non-positive scale");
  }
};

/// Axis-aligned bounding box.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 extent() const { return max - min; }
  double volume() const {
    Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }
  /// Arithmetic mean of the three box dimensions.
  double mean_dimension() const { return extent().sum() / 3.0; }

  static Aabb of_points(const std::vector<Vec3>& pts) {
    Aabb box;
    for (const auto& p : pts) box.expand(p);
    return box;
  }
};

/// One 3D-3D correspondence between a proxy-object point and a point on
/// the partial object, in world units.
struct Corr3D {
  Vec3 p_gen = Vec3::Zero();
  Vec3 p_par = Vec3::Zero();
  double confidence = 1.0;
};

}  // namespace splatalign
