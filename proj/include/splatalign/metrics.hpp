// Geometry and mask metrics: Chamfer distance (halved symmetric mean
// nearest-neighbor convention), Earth Mover's distance (exact assignment
// up to a size cap, entropic approximation above it) and mask mIoU.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "splatalign/image.hpp"
#include "splatalign/kdtree.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

/// Chamfer distance, the halved-sum convention:
///   0.5 * (mean_a min_b ||a-b|| + mean_b min_a ||a-b||).
inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw invalid_argument_error("chamfer: empty point set");
  const KdTree ta(a), tb(b);
  double ab = 0, ba = 0;
  for (const auto& p : a) ab += std::sqrt(tb.nearest(p).sq_dist);
  for (const auto& p : b) ba += std::sqrt(ta.nearest(p).sq_dist);
  return 0.5 * (ab / double(a.size()) + ba / double(b.size()));
}

namespace metrics_detail {

// Exact linear assignment via shortest augmenting paths with potentials,
// O(n^3).  Returns for every column the assigned row.
inline std::vector<int> solve_assignment(const std::vector<double>& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[std::size_t(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_of_col(n);
  for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
  return row_of_col;
}

inline std::vector<Vec3> stride_resample(const std::vector<Vec3>& pts, int m) {
  if (static_cast<int>(pts.size()) <= m) return pts;
  std::vector<Vec3> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) out.push_back(pts[std::size_t(i) * pts.size() / m]);
  return out;
}

}  // namespace metrics_detail

struct EmdConfig {
  int resample_cap = 512;  // exact assignment is used up to this size
  double sinkhorn_epsilon_scale = 0.01;
  int sinkhorn_iterations = 500;
};

/// Earth Mover's distance: both sets are deterministically resampled to
/// min(|a|, |b|, cap) points, then matched.  Up to 512 points the optimal
/// assignment is exact; larger caps fall back to a Sinkhorn approximation
/// whose cost overshoots the true optimum by at most O(epsilon * log n).
inline double emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                  const EmdConfig& cfg = {}) {
  if (a.empty() || b.empty()) throw invalid_argument_error("emd: empty point set");
  const int m = static_cast<int>(
      std::min({a.size(), b.size(), std::size_t(std::max(1, cfg.resample_cap))}));
  const auto pa = metrics_detail::stride_resample(a, m);
  const auto pb = metrics_detail::stride_resample(b, m);

  std::vector<double> cost(std::size_t(m) * m);
  double mean_cost = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      cost[std::size_t(i) * m + j] = (pa[i] - pb[j]).norm();
      mean_cost += cost[std::size_t(i) * m + j];
    }
  mean_cost /= double(m) * double(m);

  if (m <= 512) {
    const auto row_of_col = metrics_detail::solve_assignment(cost, m);
    double total = 0;
    for (int j = 0; j < m; ++j) total += cost[std::size_t(row_of_col[j]) * m + j];
    return total / double(m);
  }

  // Entropic approximation for oversized caps.
  const double eps = std::max(1e-12, cfg.sinkhorn_epsilon_scale * mean_cost);
  std::vector<double> log_u(m, 0.0), log_v(m, 0.0);
  const double log_marginal = -std::log(double(m));
  for (int it = 0; it < cfg.sinkhorn_iterations; ++it) {
    for (int i = 0; i < m; ++i) {
      double max_term = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j)
        max_term = std::max(max_term, log_v[j] - cost[std::size_t(i) * m + j] / eps);
      double sum = 0;
      for (int j = 0; j < m; ++j)
        sum += std::exp(log_v[j] - cost[std::size_t(i) * m + j] / eps - max_term);
      log_u[i] = log_marginal - (max_term + std::log(sum));
    }
    for (int j = 0; j < m; ++j) {
      double max_term = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i)
        max_term = std::max(max_term, log_u[i] - cost[std::size_t(i) * m + j] / eps);
      double sum = 0;
      for (int i = 0; i < m; ++i)
        sum += std::exp(log_u[i] - cost[std::size_t(i) * m + j] / eps - max_term);
      log_v[j] = log_marginal - (max_term + std::log(sum));
    }
  }
  // The plan's masses sum to 1, so the transport cost already is the mean
  // matched distance.
  double total = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double c = cost[std::size_t(i) * m + j];
      total += std::exp(log_u[i] + log_v[j] - c / eps) * c;
    }
  return total;
}

/// Mean intersection-over-union across aligned mask lists; views where
/// both masks are empty are skipped.
inline double miou(const std::vector<ImageU8>& pred, const std::vector<ImageU8>& gt) {
  if (pred.size() != gt.size())
    throw invalid_argument_error("miou: mask list sizes differ");
  double sum = 0;
  int counted = 0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (pred[v].width != gt[v].width || pred[v].height != gt[v].height)
      throw invalid_argument_error("miou: mask size mismatch at view " + std::to_string(v));
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred[v].data.size(); ++i) {
      const bool p = pred[v].data[i] != 0, g = gt[v].data[i] != 0;
      inter += (p && g) ? 1 : 0;
      uni += (p || g) ? 1 : 0;
    }
    if (uni == 0) continue;
    sum += double(inter) / double(uni);
    ++counted;
  }
  return counted ? sum / double(counted) : 0.0;
}

}  // namespace splatalign
