// Iterative pose/shape alignment of a coarsely registered proxy object.
//
// Each iteration gathers fresh correspondences from the provider, solves
// either the 7-DOF similarity (RANSAC + Umeyama) or the regularized
// anisotropic objective depending on the schedule, and applies the result
// as Rotate(R'), Scale(S), Rotate(R'^T), Rotate(R), Translate(t).

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "splatalign/correspond.hpp"
#include "splatalign/registration.hpp"
#include "splatalign/shape_solver.hpp"
#include "splatalign/transform_ops.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct IterSchedule {
  int total_iterations = 6;
  std::vector<int> shape_iterations = {4, 5};  // 1-based

  bool is_shape(int iteration) const {
    return std::find(shape_iterations.begin(), shape_iterations.end(), iteration) !=
           shape_iterations.end();
  }
  void validate() const {
    if (total_iterations < 1)
      throw invalid_argument_error("IterSchedule: total_iterations must be >= 1");
    for (int s : shape_iterations)
      if (s < 1 || s > total_iterations)
        throw invalid_argument_error("IterSchedule: shape iteration outside [1, total]");
  }
};

struct AlignLoopConfig {
  IterSchedule schedule;
  RansacConfig ransac;
  ShapeSolverConfig shape;
  /// Filter pairs through the pose-stage RANSAC inlier mask before the
  /// shape solve.  The mask is only applied when it represents a real
  /// consensus (inlier fraction at least `shape_filter_min_consensus`);
  /// on anisotropy-dominated residuals the similarity inlier set is a
  /// biased subsample and would starve the shape solve.
  bool ransac_filter_shape_pairs = true;
  double shape_filter_min_consensus = 0.3;
  std::uint64_t seed = 0;
};

struct IterationReport {
  int iteration = 0;
  std::string mode;       // "pose" or "shape"
  bool skipped = false;   // too few pairs or no consensus
  int n_pairs = 0;
  int n_inliers = 0;
  double residual = 0.0;  // RMS pair distance after applying the transform
  AnisotropicTransform transform;
};

struct AlignResult {
  SplatCloud aligned;
  std::vector<IterationReport> reports;
  /// Composition of every applied transform (loop-entry frame to final).
  Mat3 cumulative_linear = Mat3::Identity();
  Vec3 cumulative_translation = Vec3::Zero();
};

/// Runs the iterative alignment loop.  `gen` must already be coarsely
/// aligned onto `par`.  Throws if every iteration had to be skipped.
inline AlignResult iterative_align(const SplatCloud& gen, const SplatCloud& par,
                                   const std::vector<Camera>& cams,
                                   const std::vector<ImageU8>& masks,
                                   CorrespondenceProvider& provider,
                                   const AlignLoopConfig& cfg) {
  cfg.schedule.validate();
  if (gen.empty() || par.empty())
    throw invalid_argument_error("iterative_align: empty cloud");
  const double bbox_dim = Aabb::of_points(par.means()).mean_dimension();

  AlignResult result;
  result.aligned = gen;
  int applied = 0;

  for (int iter = 1; iter <= cfg.schedule.total_iterations; ++iter) {
    ProviderContext ctx;
    ctx.current_gen = &result.aligned;
    ctx.partial = &par;
    ctx.cams = &cams;
    ctx.masks = &masks;
    ctx.iteration = iter;
    ctx.cumulative = [&result](const Vec3& p) {
      return Vec3(result.cumulative_linear * p + result.cumulative_translation);
    };
    const std::vector<Corr3D> pairs = provider.gather(ctx);

    IterationReport report;
    report.iteration = iter;
    report.mode = cfg.schedule.is_shape(iter) ? "shape" : "pose";
    report.n_pairs = static_cast<int>(pairs.size());
    if (report.n_pairs < 3) {
      report.skipped = true;
      result.reports.push_back(report);
      continue;
    }

    AnisotropicTransform step;
    if (!cfg.schedule.is_shape(iter)) {
      const auto ransac = ransac_umeyama(pairs, cfg.ransac, bbox_dim,
                                         cfg.seed ^ (0xb5297a4d3f8c2e01ull * iter));
      if (!ransac) {
        report.skipped = true;
        result.reports.push_back(report);
        continue;
      }
      step = AnisotropicTransform::from_similarity(ransac->transform);
      report.n_inliers = ransac->inlier_count;
    } else {
      std::vector<Corr3D> fit_pairs = pairs;
      if (cfg.ransac_filter_shape_pairs) {
        const auto ransac = ransac_umeyama(pairs, cfg.ransac, bbox_dim,
                                           cfg.seed ^ (0xb5297a4d3f8c2e01ull * iter));
        if (ransac && ransac->inlier_count >=
                          cfg.shape_filter_min_consensus * double(pairs.size())) {
          fit_pairs.clear();
          for (std::size_t i = 0; i < pairs.size(); ++i)
            if (ransac->inliers[i]) fit_pairs.push_back(pairs[i]);
        }
      }
      if (fit_pairs.size() < 4) {
        report.skipped = true;
        result.reports.push_back(report);
        continue;
      }
      step = anisotropic_regularized(fit_pairs, cfg.shape).transform;
      report.n_inliers = static_cast<int>(fit_pairs.size());
    }

    result.aligned = apply_anisotropic(result.aligned, step);
    const Mat3 A = step.linear();
    result.cumulative_linear = A * result.cumulative_linear;
    result.cumulative_translation = A * result.cumulative_translation + step.translation;
    ++applied;

    double residual = 0;
    for (const auto& c : pairs) residual += (step.apply(c.p_gen) - c.p_par).squaredNorm();
    report.residual = std::sqrt(residual / double(pairs.size()));
    report.transform = step;
    result.reports.push_back(report);
  }

  if (applied == 0)
    throw std::runtime_error("iterative_align: every iteration was skipped");
  return result;
}

}  // namespace splatalign
