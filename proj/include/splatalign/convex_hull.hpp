// Convex hulls: 3D quickhull with a volume-weighted centroid, and a 2D
// monotone-chain hull used for mask completeness scoring.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "splatalign/types.hpp"

namespace splatalign {

/// Centroid of the volume enclosed by the convex hull.  Degenerate input
/// (fewer than 4 points, collinear or coplanar sets) falls back to the
/// arithmetic mean and sets the flag instead of failing.
struct HullCentroid {
  Vec3 centroid = Vec3::Zero();
  bool degenerate = false;
};

namespace hull_detail {

struct Face {
  std::array<int, 3> v;
  Vec3 normal;     // outward unit normal
  double offset;   // plane: normal . x = offset
  std::vector<int> outside;
  bool alive = true;
};

inline double signed_dist(const Face& f, const Vec3& p) {
  return f.normal.dot(p) - f.offset;
}

inline Face make_face(int a, int b, int c, const std::vector<Vec3>& pts,
                      const Vec3& interior) {
  Face f;
  f.v = {a, b, c};
  Vec3 n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  const double len = n.norm();
  if (len > 0) n /= len;
  f.normal = n;
  f.offset = n.dot(pts[a]);
  if (signed_dist(f, interior) > 0) {  // flip to point away from the interior
    std::swap(f.v[1], f.v[2]);
    f.normal = -f.normal;
    f.offset = -f.offset;
  }
  return f;
}

}  // namespace hull_detail

/// Triangulated convex hull of `pts`.  Returns an empty face list when the
/// input is degenerate (collinear/coplanar within tolerance).
inline std::vector<std::array<int, 3>> convex_hull_3d(const std::vector<Vec3>& pts) {
  using hull_detail::Face;
  const int n = static_cast<int>(pts.size());
  if (n < 4) return {};

  Aabb box = Aabb::of_points(pts);
  const double eps = 1e-9 * std::max(box.extent().norm(), 1e-30);

  // Initial simplex from extreme points.
  int i0 = 0, i1 = 0;
  {
    double best = -1;
    std::array<int, 6> ext{};
    for (int axis = 0; axis < 3; ++axis) {
      int lo = 0, hi = 0;
      for (int i = 1; i < n; ++i) {
        if (pts[i][axis] < pts[lo][axis]) lo = i;
        if (pts[i][axis] > pts[hi][axis]) hi = i;
      }
      ext[2 * axis] = lo;
      ext[2 * axis + 1] = hi;
    }
    for (int a : ext)
      for (int b : ext) {
        const double d = (pts[a] - pts[b]).squaredNorm();
        if (d > best) best = d, i0 = a, i1 = b;
      }
    if (std::sqrt(best) < eps) return {};
  }
  int i2 = -1;
  {
    double best = eps;
    const Vec3 dir = (pts[i1] - pts[i0]).normalized();
    for (int i = 0; i < n; ++i) {
      const Vec3 rel = pts[i] - pts[i0];
      const double d = (rel - rel.dot(dir) * dir).norm();
      if (d > best) best = d, i2 = i;
    }
    if (i2 < 0) return {};
  }
  int i3 = -1;
  {
    Vec3 nrm = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    double best = eps;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(nrm.dot(pts[i] - pts[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (i3 < 0) return {};
  }

  const Vec3 interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  std::vector<Face> faces;
  faces.push_back(hull_detail::make_face(i0, i1, i2, pts, interior));
  faces.push_back(hull_detail::make_face(i0, i1, i3, pts, interior));
  faces.push_back(hull_detail::make_face(i0, i2, i3, pts, interior));
  faces.push_back(hull_detail::make_face(i1, i2, i3, pts, interior));

  // Assign every point to the face it is farthest outside of.
  for (int i = 0; i < n; ++i) {
    double best = eps;
    int best_f = -1;
    for (int f = 0; f < 4; ++f) {
      const double d = hull_detail::signed_dist(faces[f], pts[i]);
      if (d > best) best = d, best_f = f;
    }
    if (best_f >= 0) faces[best_f].outside.push_back(i);
  }

  std::vector<std::size_t> work = {0, 1, 2, 3};
  while (!work.empty()) {
    const std::size_t fi = work.back();
    work.pop_back();
    if (!faces[fi].alive || faces[fi].outside.empty()) continue;

    // Farthest outside point becomes the next hull vertex.
    int apex = faces[fi].outside[0];
    {
      double best = -1;
      for (int i : faces[fi].outside) {
        const double d = hull_detail::signed_dist(faces[fi], pts[i]);
        if (d > best) best = d, apex = i;
      }
    }

    std::vector<int> orphans;
    std::map<std::pair<int, int>, int> edge_count;
    for (std::size_t g = 0; g < faces.size(); ++g) {
      if (!faces[g].alive || hull_detail::signed_dist(faces[g], pts[apex]) <= eps)
        continue;
      faces[g].alive = false;
      orphans.insert(orphans.end(), faces[g].outside.begin(), faces[g].outside.end());
      faces[g].outside.clear();
      for (int e = 0; e < 3; ++e) {
        int a = faces[g].v[e], b = faces[g].v[(e + 1) % 3];
        if (a > b) std::swap(a, b);
        edge_count[{a, b}]++;
      }
    }

    // Horizon edges appear exactly once among the visible faces.
    for (const auto& [edge, count] : edge_count) {
      if (count != 1) continue;
      faces.push_back(hull_detail::make_face(edge.first, edge.second, apex, pts, interior));
    }

    for (int i : orphans) {
      if (i == apex) continue;
      double d_best = eps;
      int best_f = -1;
      for (std::size_t g = 0; g < faces.size(); ++g) {
        if (!faces[g].alive) continue;
        const double d = hull_detail::signed_dist(faces[g], pts[i]);
        if (d > d_best) d_best = d, best_f = int(g);
      }
      if (best_f >= 0) {
        if (faces[best_f].outside.empty()) work.push_back(std::size_t(best_f));
        faces[best_f].outside.push_back(i);
      }
    }
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& f : faces)
    if (f.alive) out.push_back(f.v);
  return out;
}

inline HullCentroid convex_hull_centroid(const std::vector<Vec3>& points) {
  if (points.empty())
    throw invalid_argument_error("convex_hull_centroid: empty point set");
  const auto mean = [&] {
    Vec3 m = Vec3::Zero();
    for (const auto& p : points) m += p;
    return Vec3(m / double(points.size()));
  };

  const auto faces = convex_hull_3d(points);
  if (faces.empty()) return {mean(), true};

  Vec3 ref = Vec3::Zero();
  {
    std::vector<char> used(points.size(), 0);
    int count = 0;
    for (const auto& f : faces)
      for (int v : f)
        if (!used[v]) used[v] = 1, ref += points[v], ++count;
    ref /= double(count);
  }

  double volume = 0;
  Vec3 weighted = Vec3::Zero();
  for (const auto& f : faces) {
    const Vec3 &a = points[f[0]], &b = points[f[1]], &c = points[f[2]];
    const double v = (a - ref).dot((b - ref).cross(c - ref)) / 6.0;
    weighted += v * (ref + a + b + c) / 4.0;
    volume += v;
  }
  Aabb box = Aabb::of_points(points);
  if (volume < 1e-18 * std::pow(std::max(box.extent().norm(), 1e-30), 3))
    return {mean(), true};
  return {weighted / volume, false};
}

/// 2D convex hull (monotone chain), counter-clockwise, no duplicate endpoint.
inline std::vector<Vec2> convex_hull_2d(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a == b; }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n <= 2) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// True if `p` lies inside or on the counter-clockwise convex polygon.
inline bool point_in_convex_polygon(const std::vector<Vec2>& poly, const Vec2& p,
                                    double eps = 1e-9) {
  const int n = static_cast<int>(poly.size());
  if (n == 0) return false;
  if (n == 1) return (poly[0] - p).norm() <= eps;
  if (n == 2) {
    const Vec2 d = poly[1] - poly[0];
    const double t = d.dot(p - poly[0]) / std::max(d.squaredNorm(), 1e-30);
    return t >= -eps && t <= 1 + eps &&
           std::abs(d.x() * (p.y() - poly[0].y()) - d.y() * (p.x() - poly[0].x())) <=
               eps * std::max(1.0, d.norm());
  }
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double c = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (c < -eps) return false;
  }
  return true;
}

}  // namespace splatalign
