// CPU forward splatting.
//
// Primitives are projected with the local affine (EWA) approximation
// Sigma' = J W Sigma W^T J^T, sorted globally front-to-back by mean
// camera-space z and alpha-blended per pixel.  Blended depth uses the mean
// camera-space z of each primitive.  The footprint is cut at 3 sigma of
// the projected Gaussian, g is clamped to 0.999 and blending stops once
// transmittance drops below 1e-4.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "splatalign/image.hpp"
#include "splatalign/sh.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

/// Raised when a depth lookup hits a pixel with no coverage.
class no_depth_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RenderOutput {
  ImageD color;  // H x W x 3, linear, in [0,1]
  ImageD depth;  // H x W, camera-space z, 0 where uncovered
  ImageD alpha;  // H x W, in [0,1]
};

/// Per-pixel blend weights w_i = g_i * prod_{j<i} (1 - g_j), front to back.
struct BlendWeights {
  int width = 0, height = 0;
  std::vector<std::vector<std::pair<int, double>>> pixels;  // y * width + x

  const std::vector<std::pair<int, double>>& at(int y, int x) const {
    return pixels[std::size_t(y) * width + x];
  }
};

/// View-dependent primitive color: SH evaluated along the direction from
/// the camera center to the mean, offset by 0.5 and clamped to [0,1].
inline Vec3 splat_view_color(const GaussianPrimitive& p, int sh_degree,
                             const Vec3& camera_center) {
  Vec3 dir = p.mean - camera_center;
  const double n = dir.norm();
  dir = n > 1e-12 ? Vec3(dir / n) : Vec3(0, 0, 1);
  const Vec3 raw = p.sh * eval_sh_basis(sh_degree, dir) + Vec3::Constant(0.5);
  return raw.cwiseMax(0.0).cwiseMin(1.0);
}

namespace render_detail {

constexpr double kZNear = 1e-6;
constexpr double kCutoffExponent = -4.5;  // 3 sigma
constexpr double kMaxGaussian = 0.999;
constexpr double kMinContribution = 1e-4;
constexpr double kMinTransmittance = 1e-4;

struct ProjectedSplat {
  int index = -1;
  double z = 0;
  Vec2 center = Vec2::Zero();
  Eigen::Matrix2d inv_cov = Eigen::Matrix2d::Identity();
  double opacity = 0;
  Vec3 color = Vec3::Zero();
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

inline std::vector<ProjectedSplat> project_splats(const SplatCloud& cloud,
                                                  const Camera& cam) {
  std::vector<ProjectedSplat> out;
  out.reserve(cloud.size());
  const Vec3 cam_center = cam.center();
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    const auto& p = cloud.primitives[i];
    const Vec3 pc = cam.world_to_camera(p.mean);
    if (pc.z() <= kZNear) continue;

    ProjectedSplat s;
    s.index = i;
    s.z = pc.z();
    s.center = Vec2(cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy);

    Eigen::Matrix<double, 2, 3> J;
    const double iz = 1.0 / pc.z();
    J << cam.fx * iz, 0, -cam.fx * pc.x() * iz * iz, 0, cam.fy * iz,
        -cam.fy * pc.y() * iz * iz;
    const Eigen::Matrix<double, 2, 3> M = J * cam.rotation;
    const Eigen::Matrix2d cov2d = M * p.covariance() * M.transpose();
    const double det = cov2d.determinant();
    if (!(det > 1e-24) || !std::isfinite(det)) continue;
    s.inv_cov << cov2d(1, 1), -cov2d(0, 1), -cov2d(1, 0), cov2d(0, 0);
    s.inv_cov /= det;

    const double trace_half = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
    const double disc = std::sqrt(std::max(0.0, trace_half * trace_half - det));
    const double radius = 3.0 * std::sqrt(std::max(1e-12, trace_half + disc));

    s.x0 = std::max(0, int(std::floor(s.center.x() - radius)));
    s.x1 = std::min(cam.width - 1, int(std::ceil(s.center.x() + radius)));
    s.y0 = std::max(0, int(std::floor(s.center.y() - radius)));
    s.y1 = std::min(cam.height - 1, int(std::ceil(s.center.y() + radius)));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;

    s.opacity = p.opacity;
    s.color = splat_view_color(p, cloud.sh_degree, cam_center);
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
    return a.z < b.z || (a.z == b.z && a.index < b.index);
  });
  return out;
}

// Walks every pixel contribution front to back; `sink(px, py, splat, weight)`
// sees the blend weight g * T for each surviving sample.
template <class Sink>
inline void rasterize(const SplatCloud& cloud, const Camera& cam, Sink&& sink,
                      std::vector<double>* transmittance_out = nullptr) {
  const auto splats = project_splats(cloud, cam);
  std::vector<double> T(std::size_t(cam.width) * cam.height, 1.0);
  for (const auto& s : splats) {
    for (int py = s.y0; py <= s.y1; ++py) {
      for (int px = s.x0; px <= s.x1; ++px) {
        double& t = T[std::size_t(py) * cam.width + px];
        if (t < kMinTransmittance) continue;
        const Vec2 d(px + 0.5 - s.center.x(), py + 0.5 - s.center.y());
        const double e = -0.5 * d.dot(s.inv_cov * d);
        if (e < kCutoffExponent) continue;
        const double g = std::min(s.opacity * std::exp(e), kMaxGaussian);
        if (g < kMinContribution) continue;
        sink(px, py, s, g * t);
        t *= 1.0 - g;
      }
    }
  }
  if (transmittance_out) *transmittance_out = std::move(T);
}

}  // namespace render_detail

inline RenderOutput render(const SplatCloud& cloud, const Camera& cam) {
  cam.validate();
  RenderOutput out;
  out.color = ImageD(cam.width, cam.height, 3);
  out.depth = ImageD(cam.width, cam.height, 1);
  out.alpha = ImageD(cam.width, cam.height, 1);
  std::vector<double> T;
  render_detail::rasterize(
      cloud, cam,
      [&](int px, int py, const render_detail::ProjectedSplat& s, double w) {
        for (int c = 0; c < 3; ++c) out.color.at(py, px, c) += w * s.color[c];
        out.depth.at(py, px) += w * s.z;
      },
      &T);
  for (int py = 0; py < cam.height; ++py)
    for (int px = 0; px < cam.width; ++px)
      out.alpha.at(py, px) = 1.0 - T[std::size_t(py) * cam.width + px];
  return out;
}

inline BlendWeights render_weights(const SplatCloud& cloud, const Camera& cam) {
  cam.validate();
  BlendWeights bw;
  bw.width = cam.width;
  bw.height = cam.height;
  bw.pixels.resize(std::size_t(cam.width) * cam.height);
  render_detail::rasterize(
      cloud, cam, [&](int px, int py, const render_detail::ProjectedSplat& s, double w) {
        bw.pixels[std::size_t(py) * cam.width + px].emplace_back(s.index, w);
      });
  return bw;
}

/// World point for pixel coordinate `u` given a rendered depth map:
/// P = R^T (K^{-1} [u, 1]^T D[u] - t).
inline Vec3 unproject(const Vec2& u, const ImageD& depth_map, const Camera& cam) {
  const int px = std::clamp(int(std::floor(u.x())), 0, cam.width - 1);
  const int py = std::clamp(int(std::floor(u.y())), 0, cam.height - 1);
  const double d = depth_map.at(py, px);
  if (!(d > 0))
    throw no_depth_error("unproject: no depth at pixel (" + std::to_string(px) + ", " +
                         std::to_string(py) + ")");
  const Vec3 pc((u.x() - cam.cx) / cam.fx * d, (u.y() - cam.cy) / cam.fy * d, d);
  return cam.camera_to_world(pc);
}

/// Gradient-voting segmentation: every pixel contribution votes its blend
/// weight, positive inside the mask and negative outside.  Primitives with
/// a strictly positive total belong to the object.
inline std::vector<int> gradient_vote_segment(const SplatCloud& cloud,
                                              const std::vector<Camera>& cams,
                                              const std::vector<ImageU8>& masks) {
  if (cams.size() != masks.size())
    throw invalid_argument_error("gradient_vote_segment: camera/mask count mismatch");
  std::vector<double> votes(cloud.size(), 0.0);
  for (std::size_t v = 0; v < cams.size(); ++v) {
    const auto& mask = masks[v];
    if (mask.width != cams[v].width || mask.height != cams[v].height)
      throw invalid_argument_error("gradient_vote_segment: mask size mismatch at view " +
                                   std::to_string(v));
    render_detail::rasterize(
        cloud, cams[v],
        [&](int px, int py, const render_detail::ProjectedSplat& s, double w) {
          votes[s.index] += mask.at(py, px) ? w : -w;
        });
  }
  std::vector<int> selected;
  for (std::size_t i = 0; i < votes.size(); ++i)
    if (votes[i] > 0.0) selected.push_back(static_cast<int>(i));
  return selected;
}

/// Subset of a cloud by primitive index.
inline SplatCloud extract_primitives(const SplatCloud& cloud, const std::vector<int>& idx) {
  SplatCloud out;
  out.sh_degree = cloud.sh_degree;
  out.primitives.reserve(idx.size());
  for (int i : idx) out.primitives.push_back(cloud.primitives[i]);
  return out;
}

}  // namespace splatalign
