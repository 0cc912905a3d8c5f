// Heuristic input-view selection: mask-completeness scoring against the
// 2D convex hull, viewpoint-diversity scoring over camera poses, and the
// greedy selection loop.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "splatalign/convex_hull.hpp"
#include "splatalign/image.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct ViewScore {
  double q_shape = 0;
  double q_view = 0;
  double q_total = 0;
};

/// Foreground area divided by the filled area of the convex hull of the
/// foreground pixel centers; 1 for convex, compact masks.
inline double q_shape(const ImageU8& mask) {
  std::vector<Vec2> fg;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) fg.emplace_back(double(x), double(y));
  if (fg.empty()) throw invalid_argument_error("q_shape: empty mask");

  const auto hull = convex_hull_2d(fg);
  Vec2 lo = fg[0], hi = fg[0];
  for (const auto& p : fg) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::size_t hull_pixels = 0;
  for (int y = int(lo.y()); y <= int(hi.y()); ++y)
    for (int x = int(lo.x()); x <= int(hi.x()); ++x)
      if (point_in_convex_polygon(hull, Vec2(double(x), double(y)), 1e-9)) ++hull_pixels;
  return double(fg.size()) / double(std::max<std::size_t>(hull_pixels, 1));
}

/// Viewpoint diversity against an already selected set: equal-weight blend
/// of the normalized minimum position distance and a direction-diversity
/// term (1 - max dot, mapped to [0,1]).  `all_candidates` fixes the
/// position normalization.
inline double q_view(const Camera& candidate, const std::vector<Camera>& selected,
                     const std::vector<Camera>& all_candidates, double epsilon = 1e-9) {
  if (selected.empty()) throw invalid_argument_error("q_view: empty selected set");

  auto min_pos_dist = [&](const Camera& cam) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : selected)
      best = std::min(best, (cam.center() - s.center()).norm());
    return best;
  };
  const double d_pos = min_pos_dist(candidate);
  double d_min = std::numeric_limits<double>::infinity(), d_max = 0;
  for (const auto& c : all_candidates) {
    const double d = min_pos_dist(c);
    d_min = std::min(d_min, d);
    d_max = std::max(d_max, d);
  }
  const double pos_score = (d_pos - d_min) / (d_max - d_min + epsilon);

  double max_dot = -1.0;
  for (const auto& s : selected)
    max_dot = std::max(max_dot, candidate.view_direction().dot(s.view_direction()));
  const double rot_score = (1.0 - max_dot) / 2.0;

  return 0.5 * pos_score + 0.5 * rot_score;
}

struct ViewSelection {
  std::vector<int> indices;          // selected views, in pick order
  std::vector<ViewScore> scores;     // per selected view
  std::vector<int> survivors;        // candidate pool after the discard
};

/// Greedy view selection: drop the 30% of views with the smallest object
/// coverage, start from the best shape score, then repeatedly add the
/// candidate maximizing lambda_s * q_shape + lambda_v * q_view.  Ties go
/// to the lower view index.
inline ViewSelection select_views(const std::vector<ImageU8>& masks,
                                  const std::vector<Camera>& cams, int k,
                                  double lambda_s = 0.5, double lambda_v = 0.5) {
  if (masks.size() != cams.size())
    throw invalid_argument_error("select_views: mask/camera count mismatch");
  if (k < 1) throw invalid_argument_error("select_views: k must be >= 1");
  const int n = static_cast<int>(masks.size());
  if (n == 0) throw invalid_argument_error("select_views: no views");

  // Discard the bottom 30% by object pixel fraction.
  std::vector<double> fraction(n);
  for (int i = 0; i < n; ++i)
    fraction[i] = double(mask_area(masks[i])) / double(masks[i].pixel_count());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return fraction[a] < fraction[b] || (fraction[a] == fraction[b] && a < b);
  });
  const int n_discard = static_cast<int>(0.3 * n);
  ViewSelection out;
  out.survivors.assign(order.begin() + n_discard, order.end());
  std::sort(out.survivors.begin(), out.survivors.end());
  if (out.survivors.empty())
    throw invalid_argument_error("select_views: no views survive the discard");

  std::vector<double> shape(out.survivors.size());
  std::vector<Camera> pool;
  for (std::size_t i = 0; i < out.survivors.size(); ++i) {
    shape[i] = q_shape(masks[out.survivors[i]]);
    pool.push_back(cams[out.survivors[i]]);
  }

  std::vector<char> taken(out.survivors.size(), 0);
  std::vector<Camera> selected_cams;
  // First pick: best shape completeness.
  {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.survivors.size(); ++i)
      if (shape[i] > shape[best]) best = i;
    taken[best] = 1;
    out.indices.push_back(out.survivors[best]);
    out.scores.push_back({shape[best], 0.0, lambda_s * shape[best]});
    selected_cams.push_back(pool[best]);
  }
  const int target = std::min<int>(k, static_cast<int>(out.survivors.size()));
  while (static_cast<int>(out.indices.size()) < target) {
    double best_q = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    ViewScore best_score;
    for (std::size_t i = 0; i < out.survivors.size(); ++i) {
      if (taken[i]) continue;
      ViewScore s;
      s.q_shape = shape[i];
      s.q_view = q_view(pool[i], selected_cams, pool);
      s.q_total = lambda_s * s.q_shape + lambda_v * s.q_view;
      if (s.q_total > best_q) {
        best_q = s.q_total;
        best = i;
        best_score = s;
      }
    }
    taken[best] = 1;
    out.indices.push_back(out.survivors[best]);
    out.scores.push_back(best_score);
    selected_cams.push_back(pool[best]);
  }
  return out;
}

}  // namespace splatalign
