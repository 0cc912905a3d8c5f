// Whole-cloud transform rules.  All operations return new clouds.
//
// Rotation: mean <- R mean, quaternion <- quat(R) * quaternion, SH rotated
// band-wise.  Scale: mean <- S (.) mean, scale <- scale (.) S (exact for
// axis-aligned primitives or isotropic S; the general case keeps this rule
// by contract).  The anisotropic action composes
//   Rotate(R'), Scale(S), Rotate(R'^T), Rotate(R), Translate(t).

#pragma once

#include "splatalign/sh.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

inline SplatCloud apply_rotation(const SplatCloud& cloud, const Mat3& R) {
  if (!is_rotation_matrix(R))
    throw invalid_argument_error("apply_rotation: R not in SO(3)");
  const auto band_mats = sh_rotation_matrices(R, cloud.sh_degree);
  const Quat qr(R);
  SplatCloud out = cloud;
  for (auto& p : out.primitives) {
    p.mean = R * p.mean;
    p.rotation = (qr * p.rotation).normalized();
    for (int l = 1; l <= cloud.sh_degree; ++l) {
      const int offset = l * l, width = 2 * l + 1;
      p.sh.middleCols(offset, width) =
          (p.sh.middleCols(offset, width) * band_mats[l].transpose()).eval();
    }
  }
  return out;
}

inline SplatCloud apply_scale(const SplatCloud& cloud, const Vec3& S) {
  if (!(S.array() > 0.0).all())
    throw invalid_argument_error("apply_scale: scale components must be > 0");
  SplatCloud out = cloud;
  for (auto& p : out.primitives) {
    p.mean = p.mean.cwiseProduct(S);
    p.scale = p.scale.cwiseProduct(S);
  }
  return out;
}

inline SplatCloud apply_translation(const SplatCloud& cloud, const Vec3& t) {
  SplatCloud out = cloud;
  for (auto& p : out.primitives) p.mean += t;
  return out;
}

inline SplatCloud apply_similarity(const SplatCloud& cloud, const SimilarityTransform& T) {
  T.validate();
  SplatCloud out = apply_rotation(cloud, T.rotation);
  out = apply_scale(out, Vec3::Constant(T.scale));
  return apply_translation(out, T.translation);
}

inline SplatCloud apply_anisotropic(const SplatCloud& cloud, const AnisotropicTransform& T) {
  T.validate();
  SplatCloud out = apply_rotation(cloud, T.frame);
  out = apply_scale(out, T.scale);
  out = apply_rotation(out, T.frame.transpose());
  out = apply_rotation(out, T.rotation);
  return apply_translation(out, T.translation);
}

}  // namespace splatalign
