// Coarse and correspondence-based registration: closed-form similarity
// estimation (Umeyama), a seeded RANSAC wrapper, multi-start point-to-point
// ICP and the bounding-box/centroid coarse alignment.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "splatalign/convex_hull.hpp"
#include "splatalign/kdtree.hpp"
#include "splatalign/math_util.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct IcpConfig {
  double max_corr_dist_factor = 0.16;  // x mean bbox dimension of the target
  int max_iterations = 400;
  int n_candidate_rotations = 128 * 128;
  int n_start_rotations = 128;
  int max_points = 4096;  // clouds are strided down to this size for ICP
};

struct RansacConfig {
  int max_iterations = 2000;
  double inlier_dist_factor = 0.01;  // x mean bbox dimension of the target
  int min_sample = 3;
};

/// Closed-form least-squares similarity: argmin sum ||s R p_gen + t - p_par||^2.
/// Throws degenerate_geometry_error for collinear configurations.
inline SimilarityTransform umeyama(const std::vector<Corr3D>& pairs) {
  const int n = static_cast<int>(pairs.size());
  if (n < 3) throw invalid_argument_error("umeyama: need at least 3 pairs");

  Vec3 mean_x = Vec3::Zero(), mean_y = Vec3::Zero();
  for (const auto& c : pairs) {
    mean_x += c.p_gen;
    mean_y += c.p_par;
  }
  mean_x /= n;
  mean_y /= n;

  Mat3 sigma_xy = Mat3::Zero();
  double var_x = 0;
  for (const auto& c : pairs) {
    const Vec3 dx = c.p_gen - mean_x;
    const Vec3 dy = c.p_par - mean_y;
    sigma_xy += dy * dx.transpose();
    var_x += dx.squaredNorm();
  }
  sigma_xy /= n;
  var_x /= n;
  if (var_x < 1e-24) throw degenerate_geometry_error("umeyama: source points coincide");

  Eigen::JacobiSVD<Mat3> svd(sigma_xy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  if (d(1) <= 1e-12 * std::max(d(0), 1e-300))
    throw degenerate_geometry_error("umeyama: collinear configuration");

  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1;

  SimilarityTransform out;
  out.rotation = svd.matrixU() * S * svd.matrixV().transpose();
  out.scale = (d.asDiagonal() * S).trace() / var_x;
  if (!(out.scale > 0))
    throw degenerate_geometry_error("umeyama: non-positive scale estimate");
  out.translation = mean_y - out.scale * (out.rotation * mean_x);
  return out;
}

struct RansacResult {
  SimilarityTransform transform;
  std::vector<char> inliers;  // one flag per input pair
  int inlier_count = 0;
};

/// Seeded RANSAC around `umeyama`.  A model counts as consensus only when
/// it gathers at least one inlier beyond the minimal sample; otherwise the
/// result is empty.
inline std::optional<RansacResult> ransac_umeyama(const std::vector<Corr3D>& pairs,
                                                  const RansacConfig& cfg,
                                                  double bbox_mean_dim,
                                                  std::uint64_t seed) {
  const int n = static_cast<int>(pairs.size());
  if (n < cfg.min_sample)
    throw invalid_argument_error("ransac_umeyama: fewer pairs than the minimal sample");
  const double thr = cfg.inlier_dist_factor * bbox_mean_dim;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);

  int best_count = 0;
  std::vector<char> best_mask;
  std::vector<Corr3D> sample(cfg.min_sample);
  std::vector<char> mask(n);
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    int idx[3];
    do {
      for (int k = 0; k < 3; ++k) idx[k] = pick(rng);
    } while (idx[0] == idx[1] || idx[0] == idx[2] || idx[1] == idx[2]);
    for (int k = 0; k < 3; ++k) sample[k] = pairs[idx[k]];

    SimilarityTransform model;
    try {
      model = umeyama(sample);
    } catch (const degenerate_geometry_error&) {
      continue;
    }
    int count = 0;
    for (int i = 0; i < n; ++i) {
      mask[i] = (model.apply(pairs[i].p_gen) - pairs[i].p_par).norm() < thr ? 1 : 0;
      count += mask[i];
    }
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
    }
  }
  if (best_count <= cfg.min_sample) return std::nullopt;

  std::vector<Corr3D> inlier_pairs;
  for (int i = 0; i < n; ++i)
    if (best_mask[i]) inlier_pairs.push_back(pairs[i]);
  RansacResult out;
  try {
    out.transform = umeyama(inlier_pairs);
  } catch (const degenerate_geometry_error&) {
    return std::nullopt;
  }
  out.inliers.resize(n);
  out.inlier_count = 0;
  for (int i = 0; i < n; ++i) {
    out.inliers[i] =
        (out.transform.apply(pairs[i].p_gen) - pairs[i].p_par).norm() < thr ? 1 : 0;
    out.inlier_count += out.inliers[i];
  }
  if (out.inlier_count <= cfg.min_sample) return std::nullopt;
  return out;
}

/// Draws `n_candidates` uniform random rotations and greedily keeps the
/// `n_selected` forming the largest geodesic angles with those already
/// kept, starting from the first candidate.
inline std::vector<Mat3> sample_dispersed_rotations(int n_candidates, int n_selected,
                                                    std::uint64_t seed) {
  if (n_selected > n_candidates)
    throw invalid_argument_error("sample_dispersed_rotations: n_selected > n_candidates");
  if (n_selected < 1) return {};
  std::mt19937_64 rng(seed);
  std::vector<Quat> cand(n_candidates);
  for (auto& q : cand) q = random_unit_quaternion(rng);

  auto angle = [](const Quat& a, const Quat& b) {
    const double dot = std::min(1.0, std::abs(a.coeffs().dot(b.coeffs())));
    return 2.0 * std::acos(dot);
  };

  std::vector<int> selected = {0};
  std::vector<double> min_angle(n_candidates);
  for (int i = 0; i < n_candidates; ++i) min_angle[i] = angle(cand[i], cand[0]);
  while (static_cast<int>(selected.size()) < n_selected) {
    int best = 0;
    for (int i = 1; i < n_candidates; ++i)
      if (min_angle[i] > min_angle[best]) best = i;
    selected.push_back(best);
    for (int i = 0; i < n_candidates; ++i)
      min_angle[i] = std::min(min_angle[i], angle(cand[i], cand[best]));
  }

  std::vector<Mat3> out;
  out.reserve(selected.size());
  for (int i : selected) out.push_back(cand[i].toRotationMatrix());
  return out;
}

struct IcpResult {
  SimilarityTransform transform;  // rigid, scale fixed at 1
  double fitness = 0.0;           // gated correspondences / source points
  double rmse = 0.0;
};

namespace reg_detail {

// Rigid Kabsch fit dst ~= R src + t on matched pairs.
inline void kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst, Mat3& R,
                   Vec3& t) {
  const int n = static_cast<int>(src.size());
  Vec3 mx = Vec3::Zero(), my = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    mx += src[i];
    my += dst[i];
  }
  mx /= n;
  my /= n;
  Mat3 H = Mat3::Zero();
  for (int i = 0; i < n; ++i) H += (dst[i] - my) * (src[i] - mx).transpose();
  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 S = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) S(2, 2) = -1;
  R = svd.matrixU() * S * svd.matrixV().transpose();
  t = my - R * mx;
}

inline std::vector<Vec3> stride_sample(const std::vector<Vec3>& pts, int max_points) {
  if (static_cast<int>(pts.size()) <= max_points) return pts;
  std::vector<Vec3> out;
  out.reserve(max_points);
  for (int i = 0; i < max_points; ++i)
    out.push_back(pts[std::size_t(i) * pts.size() / max_points]);
  return out;
}

}  // namespace reg_detail

/// Point-to-point ICP with a fixed correspondence gate.  `init_rotation`
/// seeds the pose; translation starts at zero (sources are expected to be
/// pre-centered on the target).
inline IcpResult icp(const std::vector<Vec3>& src, const std::vector<Vec3>& dst,
                     const Mat3& init_rotation, const IcpConfig& cfg) {
  if (src.size() < 3 || dst.size() < 3)
    throw invalid_argument_error("icp: need at least 3 points on both sides");
  const double gate = cfg.max_corr_dist_factor * Aabb::of_points(dst).mean_dimension();
  const KdTree tree(dst);

  Mat3 R = init_rotation;
  Vec3 t = Vec3::Zero();
  double prev_rmse = std::numeric_limits<double>::infinity();
  IcpResult out;
  std::vector<Vec3> ms, md;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    ms.clear();
    md.clear();
    double sq_sum = 0;
    for (const auto& p : src) {
      const Vec3 q = R * p + t;
      const auto hit = tree.nearest(q);
      if (hit.sq_dist <= gate * gate) {
        ms.push_back(p);
        md.push_back(tree.point(hit.index));
        sq_sum += hit.sq_dist;
      }
    }
    if (ms.size() < 3) {
      out.transform.rotation = R;
      out.transform.translation = t;
      out.fitness = double(ms.size()) / double(src.size());
      out.rmse = ms.empty() ? 0.0 : std::sqrt(sq_sum / double(ms.size()));
      return out;
    }
    const double rmse = std::sqrt(sq_sum / double(ms.size()));
    reg_detail::kabsch(ms, md, R, t);
    if (std::abs(prev_rmse - rmse) < 1e-12 * std::max(1.0, rmse)) {
      prev_rmse = rmse;
      break;
    }
    prev_rmse = rmse;
  }

  // Final correspondence pass under the converged pose.
  double sq_sum = 0;
  int matched = 0;
  for (const auto& p : src) {
    const auto hit = tree.nearest(R * p + t);
    if (hit.sq_dist <= gate * gate) {
      sq_sum += hit.sq_dist;
      ++matched;
    }
  }
  out.transform.rotation = R;
  out.transform.translation = t;
  out.fitness = double(matched) / double(src.size());
  out.rmse = matched ? std::sqrt(sq_sum / matched) : 0.0;
  return out;
}

/// Coarse 7-DOF alignment of the proxy onto the partial object: bounding
/// box volume ratio fixes the scale, convex-hull centroids fix the
/// translation and the rotation comes from the best multi-start ICP run
/// (fitness first, then rmse, then candidate index).
inline SimilarityTransform coarse_align(const SplatCloud& gen, const SplatCloud& par,
                                        const IcpConfig& cfg, std::uint64_t seed) {
  if (gen.empty() || par.empty())
    throw invalid_argument_error("coarse_align: empty cloud");
  const auto gen_pts = gen.means();
  const auto par_pts = par.means();
  const Aabb gen_box = Aabb::of_points(gen_pts);
  const Aabb par_box = Aabb::of_points(par_pts);
  if (gen_box.volume() <= 0 || par_box.volume() <= 0)
    throw degenerate_geometry_error("coarse_align: zero-volume bounding box");

  const double scale = std::cbrt(par_box.volume() / gen_box.volume());
  const Vec3 c_gen = convex_hull_centroid(gen_pts).centroid;
  const Vec3 c_par = convex_hull_centroid(par_pts).centroid;

  // Centered frames: rotations pivot about the shared centroid.
  std::vector<Vec3> src, dst;
  src.reserve(gen_pts.size());
  dst.reserve(par_pts.size());
  for (const auto& p : gen_pts) src.push_back(scale * (p - c_gen));
  for (const auto& p : par_pts) dst.push_back(p - c_par);
  src = reg_detail::stride_sample(src, cfg.max_points);
  dst = reg_detail::stride_sample(dst, cfg.max_points);

  const auto starts =
      sample_dispersed_rotations(cfg.n_candidate_rotations, cfg.n_start_rotations, seed);
  IcpResult best;
  best.fitness = -1.0;
  for (const auto& R0 : starts) {
    const IcpResult r = icp(src, dst, R0, cfg);
    if (r.fitness > best.fitness ||
        (r.fitness == best.fitness && r.rmse < best.rmse)) {
      best = r;
    }
  }

  SimilarityTransform out;
  out.rotation = best.transform.rotation;
  out.scale = scale;
  out.translation =
      c_par + best.transform.translation - scale * (best.transform.rotation * c_gen);
  return out;
}

}  // namespace splatalign
