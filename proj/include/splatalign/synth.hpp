// Synthetic ground-truth scenes: parametric splat objects resting on a
// plane, a circular camera ring, pose-space view dropping, and the
// visibility-based degradation that turns full objects into partial ones.
// Scene units are centimeters.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "splatalign/image.hpp"
#include "splatalign/json_io.hpp"
#include "splatalign/math_util.hpp"
#include "splatalign/ply_io.hpp"
#include "splatalign/render.hpp"
#include "splatalign/sh.hpp"
#include "splatalign/transform_ops.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

struct SynthConfig {
  int n_objects = 3;
  int n_views = 30;
  int image_size = 64;
  int points_per_object = 700;
  int sh_degree = 3;
  double min_object_size = 14.0;   // cm
  double max_object_size = 30.0;
  double placement_radius = 45.0;  // objects stay inside this disc
  double plane_half_extent = 90.0;
  double ring_radius = 150.0;
  double ring_height = 95.0;
  double proxy_albedo_jitter = 0.12;  // planted appearance mismatch on proxies
  int placement_retries = 200;
};

struct DegradeConfig {
  double drop_fraction = 2.0 / 3.0;
  double jitter_sigma_factor = 0.002;  // x mean bbox dimension of the object
};

struct SceneBundle {
  std::vector<SplatCloud> full_clouds;
  std::vector<SplatCloud> partial_clouds;
  std::vector<SplatCloud> proxy_clouds;  // full clouds mapped out of scene pose
  SplatCloud background;
  std::vector<Camera> cams;
  std::vector<std::vector<ImageU8>> masks;  // [object][view]
  std::vector<AnisotropicTransform> gt_transforms;  // proxy frame -> scene frame
  std::vector<int> train_views, test_views;
  std::uint64_t seed = 0;
  // Outward surface normals per object primitive; in-memory only, used by
  // visibility oracles.
  std::vector<std::vector<Vec3>> surface_normals;
};

namespace synth_detail {

struct SurfaceSample {
  Vec3 position;
  Vec3 normal;
};

inline std::vector<SurfaceSample> sample_ellipsoid(std::mt19937_64& rng, const Vec3& semi,
                                                   int n) {
  std::vector<SurfaceSample> out;
  out.reserve(n);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i + 0.02 * jitter(rng);
    const Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
    SurfaceSample s;
    s.position = d.cwiseProduct(semi);
    s.normal = Vec3(d.x() / semi.x(), d.y() / semi.y(), d.z() / semi.z()).normalized();
    out.push_back(s);
  }
  return out;
}

inline std::vector<SurfaceSample> sample_box(std::mt19937_64& rng, const Vec3& half, int n) {
  const double areas[3] = {half.y() * half.z(), half.x() * half.z(), half.x() * half.y()};
  const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    double pick = u01(rng) * total;
    int axis = 0;
    double sign = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (pick < areas[a]) {
        axis = a;
        sign = 1.0;
        break;
      }
      pick -= areas[a];
      if (pick < areas[a]) {
        axis = a;
        sign = -1.0;
        break;
      }
      pick -= areas[a];
    }
    Vec3 p;
    p[axis] = sign * half[axis];
    const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
    p[u_axis] = (2.0 * u01(rng) - 1.0) * half[u_axis];
    p[v_axis] = (2.0 * u01(rng) - 1.0) * half[v_axis];
    Vec3 normal = Vec3::Zero();
    normal[axis] = sign;
    out.push_back({p, normal});
  }
  return out;
}

inline std::vector<SurfaceSample> sample_cylinder(std::mt19937_64& rng, double radius,
                                                  double half_height, int n) {
  const double side = 2.0 * M_PI * radius * 2.0 * half_height;
  const double cap = M_PI * radius * radius;
  const double total = side + 2.0 * cap;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double pick = u01(rng) * total;
    SurfaceSample s;
    if (pick < side) {
      const double phi = 2.0 * M_PI * u01(rng);
      s.position = Vec3(radius * std::cos(phi), radius * std::sin(phi),
                        (2.0 * u01(rng) - 1.0) * half_height);
      s.normal = Vec3(std::cos(phi), std::sin(phi), 0);
    } else {
      const double sign = pick < side + cap ? 1.0 : -1.0;
      const double rr = radius * std::sqrt(u01(rng));
      const double phi = 2.0 * M_PI * u01(rng);
      s.position = Vec3(rr * std::cos(phi), rr * std::sin(phi), sign * half_height);
      s.normal = Vec3(0, 0, sign);
    }
    out.push_back(s);
  }
  return out;
}

// Rotation taking +z to `normal`.
inline Quat frame_from_normal(const Vec3& normal) {
  return Quat::FromTwoVectors(Vec3::UnitZ(), normal);
}

inline Eigen::Matrix<double, 3, Eigen::Dynamic> albedo_sh(std::mt19937_64& rng,
                                                          const Vec3& albedo, int degree,
                                                          double rest_scale) {
  std::uniform_real_distribution<double> jitter(-rest_scale, rest_scale);
  Eigen::Matrix<double, 3, Eigen::Dynamic> sh(3, sh_coeff_count(degree));
  for (int ch = 0; ch < 3; ++ch) {
    sh(ch, 0) = (albedo[ch] - 0.5) / sh_detail::kC0;
    for (int c = 1; c < sh.cols(); ++c) sh(ch, c) = jitter(rng);
  }
  return sh;
}

inline SplatCloud make_shell_object(std::mt19937_64& rng, int shape_kind, double size,
                                    int n_points, int degree, const Vec3& albedo,
                                    std::vector<Vec3>* normals_out) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<SurfaceSample> samples;
  double area = 0;
  if (shape_kind == 0) {
    const Vec3 semi(0.5 * size, 0.5 * size * (0.6 + 0.4 * u01(rng)),
                    0.5 * size * (0.5 + 0.5 * u01(rng)));
    samples = sample_ellipsoid(rng, semi, n_points);
    area = 4.0 * M_PI *
           (semi.x() * semi.y() + semi.x() * semi.z() + semi.y() * semi.z()) / 3.0;
  } else if (shape_kind == 1) {
    const Vec3 half(0.5 * size, 0.5 * size * (0.5 + 0.5 * u01(rng)),
                    0.5 * size * (0.4 + 0.6 * u01(rng)));
    samples = sample_box(rng, half, n_points);
    area = 8.0 * (half.x() * half.y() + half.x() * half.z() + half.y() * half.z());
  } else {
    const double radius = 0.3 * size * (0.7 + 0.6 * u01(rng));
    const double half_height = 0.5 * size;
    samples = sample_cylinder(rng, radius, half_height, n_points);
    area = 2.0 * M_PI * radius * (2.0 * half_height + radius);
  }
  const double spacing = std::sqrt(area / double(n_points));

  SplatCloud cloud;
  cloud.sh_degree = degree;
  cloud.primitives.reserve(samples.size());
  if (normals_out) normals_out->clear();
  std::uniform_real_distribution<double> op(0.88, 0.97);
  std::uniform_real_distribution<double> tint(-0.06, 0.06);
  for (const auto& s : samples) {
    GaussianPrimitive p;
    p.mean = s.position;
    p.rotation = frame_from_normal(s.normal);
    p.scale = Vec3(0.8 * spacing, 0.8 * spacing, 0.15 * spacing);
    p.opacity = op(rng);
    Vec3 color = albedo + Vec3(tint(rng), tint(rng), tint(rng));
    color = color.cwiseMax(0.08).cwiseMin(0.92);
    p.sh = albedo_sh(rng, color, degree, 0.03);
    cloud.primitives.push_back(std::move(p));
    if (normals_out) normals_out->push_back(s.normal);
  }
  return cloud;
}

inline SplatCloud make_plane(std::mt19937_64& rng, double half_extent, int degree) {
  SplatCloud plane;
  plane.sh_degree = degree;
  const double spacing = 6.0;
  std::uniform_real_distribution<double> jitter(-0.3 * spacing, 0.3 * spacing);
  std::uniform_real_distribution<double> op(0.9, 0.97);
  std::uniform_real_distribution<double> tone(-0.05, 0.05);
  for (double y = -half_extent; y <= half_extent; y += spacing)
    for (double x = -half_extent; x <= half_extent; x += spacing) {
      GaussianPrimitive p;
      p.mean = Vec3(x + jitter(rng), y + jitter(rng), 0.0);
      p.scale = Vec3(0.9 * spacing, 0.9 * spacing, 0.4);
      p.opacity = op(rng);
      const double g = 0.45 + tone(rng);
      p.sh = albedo_sh(rng, Vec3(g * 1.05, g, g * 0.9), degree, 0.01);
      plane.primitives.push_back(std::move(p));
    }
  return plane;
}

inline Camera look_at_camera(const Vec3& eye, const Vec3& target, double focal, int size) {
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = cam.cy = size / 2.0;
  cam.width = cam.height = size;
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x;
  R.row(1) = y;
  R.row(2) = z;
  cam.rotation = R;
  cam.translation = -(R * eye);
  return cam;
}

}  // namespace synth_detail

/// Decomposes a positive-determinant linear map into the transform family
/// via polar/SVD: A = R * F^T diag(S) F.
inline AnisotropicTransform anisotropic_from_linear(const Mat3& A, const Vec3& t) {
  if (A.determinant() <= 0)
    throw invalid_argument_error("anisotropic_from_linear: non-positive determinant");
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // det(A) > 0 implies det(U) det(V) = +1, so U V^T is already a rotation.
  AnisotropicTransform out;
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  Mat3 frame = svd.matrixV().transpose();
  if (frame.determinant() < 0) frame.row(2) = -frame.row(2);  // scale-invariant flip
  out.frame = frame;
  out.scale = svd.singularValues();
  out.translation = t;
  return out;
}

/// Generates a full scene: shell objects with disjoint footprints resting
/// on the plane, a circular camera ring, per-object masks and planted
/// proxy transforms.  Partial clouds are filled in by `degrade_object`.
inline SceneBundle gen_scene(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.n_objects < 1) throw invalid_argument_error("gen_scene: n_objects must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  SceneBundle bundle;
  bundle.seed = seed;
  bundle.background = synth_detail::make_plane(rng, cfg.plane_half_extent, cfg.sh_degree);

  const Vec3 palette[6] = {Vec3(0.75, 0.3, 0.25), Vec3(0.25, 0.55, 0.75),
                           Vec3(0.35, 0.65, 0.3),  Vec3(0.8, 0.65, 0.25),
                           Vec3(0.6, 0.35, 0.65),  Vec3(0.3, 0.6, 0.6)};

  std::vector<Aabb> footprints;
  for (int obj = 0; obj < cfg.n_objects; ++obj) {
    const double size =
        cfg.min_object_size + (cfg.max_object_size - cfg.min_object_size) * u01(rng);
    std::vector<Vec3> normals;
    SplatCloud local = synth_detail::make_shell_object(
        rng, obj % 3, size, cfg.points_per_object, cfg.sh_degree, palette[obj % 6],
        &normals);

    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      const double yaw = 2.0 * M_PI * u01(rng);
      const double px = (2.0 * u01(rng) - 1.0) * cfg.placement_radius;
      const double py = (2.0 * u01(rng) - 1.0) * cfg.placement_radius;
      const Mat3 R = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();

      double min_bottom = std::numeric_limits<double>::infinity();
      Aabb fp;
      std::vector<Vec3> rotated(local.size());
      for (std::size_t i = 0; i < local.size(); ++i) {
        rotated[i] = R * local.primitives[i].mean;
        min_bottom =
            std::min(min_bottom, rotated[i].z() - 2.0 * local.primitives[i].scale.z());
      }
      const Vec3 offset(px, py, -min_bottom);
      for (auto& p : rotated) {
        const Vec3 world = p + offset;
        fp.expand(Vec3(world.x(), world.y(), 0.0));
      }
      bool overlaps = false;
      for (const auto& other : footprints) {
        const bool disjoint = fp.max.x() + 2.0 < other.min.x() ||
                              other.max.x() + 2.0 < fp.min.x() ||
                              fp.max.y() + 2.0 < other.min.y() ||
                              other.max.y() + 2.0 < fp.min.y();
        if (!disjoint) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;

      footprints.push_back(fp);
      SplatCloud world = apply_rotation(local, R);
      world = apply_translation(world, offset);
      bundle.full_clouds.push_back(std::move(world));
      std::vector<Vec3> world_normals(normals.size());
      for (std::size_t i = 0; i < normals.size(); ++i) world_normals[i] = R * normals[i];
      bundle.surface_normals.push_back(std::move(world_normals));
      placed = true;
    }
    if (!placed)
      throw std::runtime_error("gen_scene: could not place object " + std::to_string(obj) +
                               " without footprint overlap");
  }

  // Camera ring around the scene center.
  const Vec3 target(0, 0, 12.0);
  for (int v = 0; v < cfg.n_views; ++v) {
    const double theta = 2.0 * M_PI * v / cfg.n_views;
    const Vec3 eye(cfg.ring_radius * std::cos(theta), cfg.ring_radius * std::sin(theta),
                   cfg.ring_height);
    bundle.cams.push_back(synth_detail::look_at_camera(eye, target, double(cfg.image_size),
                                                       cfg.image_size));
  }

  // Per-object masks from the object's own alpha.
  bundle.masks.resize(cfg.n_objects);
  for (int obj = 0; obj < cfg.n_objects; ++obj) {
    bundle.masks[obj].reserve(bundle.cams.size());
    for (const auto& cam : bundle.cams) {
      const RenderOutput r = render(bundle.full_clouds[obj], cam);
      ImageU8 mask(cam.width, cam.height, 1);
      for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] = r.alpha.data[i] > 0.3 ? 255 : 0;
      bundle.masks[obj].push_back(std::move(mask));
    }
  }

  // Planted transforms and the proxies they displace.  The per-axis scale
  // band keeps the planted anisotropy inside what two shape-refinement
  // rounds reliably absorb, which is what makes every bundle solvable by
  // construction.
  std::uniform_real_distribution<double> uscale(0.9, 1.2);
  std::uniform_real_distribution<double> uangle(15.0, 45.0);
  std::uniform_real_distribution<double> ushift(-30.0, 30.0);
  for (int obj = 0; obj < cfg.n_objects; ++obj) {
    AnisotropicTransform t;
    t.rotation = random_rotation_with_angle(rng, uangle(rng) * M_PI / 180.0);
    t.scale = Vec3(uscale(rng), uscale(rng), uscale(rng));
    t.translation = Vec3(ushift(rng), ushift(rng), ushift(rng) * 0.3 + 20.0);
    bundle.gt_transforms.push_back(t);

    // Proxy with a planted albedo mismatch, as a generative stand-in would
    // have one.
    SplatCloud proxy = apply_anisotropic(bundle.full_clouds[obj], t.inverse());
    std::normal_distribution<double> albedo_jitter(0.0, cfg.proxy_albedo_jitter);
    const Vec3 shift(albedo_jitter(rng), albedo_jitter(rng), albedo_jitter(rng));
    for (auto& p : proxy.primitives)
      for (int ch = 0; ch < 3; ++ch) p.sh(ch, 0) += shift[ch] / sh_detail::kC0;
    bundle.proxy_clouds.push_back(std::move(proxy));
  }

  bundle.partial_clouds.resize(cfg.n_objects);
  return bundle;
}

/// Splits the ring into train/test by dropping the views closest to a
/// seeded start in joint position-orientation space.
inline std::pair<std::vector<int>, std::vector<int>> drop_views(
    const std::vector<Camera>& cams, const DegradeConfig& cfg, std::uint64_t seed) {
  const int n = static_cast<int>(cams.size());
  if (n < 2) throw invalid_argument_error("drop_views: need at least 2 views");
  if (!(cfg.drop_fraction >= 0.0 && cfg.drop_fraction < 1.0))
    throw invalid_argument_error("drop_views: fraction outside [0,1)");

  double max_pos = 0, max_rot = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      max_pos = std::max(max_pos, (cams[i].center() - cams[j].center()).norm());
      max_rot = std::max(max_rot, rotation_angle_between(cams[i].rotation, cams[j].rotation));
    }
  max_pos = std::max(max_pos, 1e-12);
  max_rot = std::max(max_rot, 1e-12);

  std::mt19937_64 rng(seed);
  const int start = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    const double dp = (cams[i].center() - cams[start].center()).norm() / max_pos;
    const double dr =
        rotation_angle_between(cams[i].rotation, cams[start].rotation) / max_rot;
    dist[i] = {0.5 * dp + 0.5 * dr, i};
  }
  std::sort(dist.begin(), dist.end());
  const int n_test = static_cast<int>(std::ceil(cfg.drop_fraction * n));
  std::vector<int> test, train;
  for (int k = 0; k < n; ++k)
    (k < n_test ? test : train).push_back(dist[k].second);
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

/// Simulates reconstruction from the training views: primitives that no
/// train view sees (in-frustum and unoccluded against the object's own
/// depth) are removed and the survivors get a small position jitter.
inline SplatCloud degrade_object(const SplatCloud& cloud, const std::vector<Camera>& train_cams,
                                 const DegradeConfig& cfg, std::uint64_t seed) {
  if (cloud.empty()) throw invalid_argument_error("degrade_object: empty cloud");
  const Aabb box = Aabb::of_points(cloud.means());
  const double depth_tol = 0.015 * box.extent().norm();

  std::vector<char> visible(cloud.size(), 0);
  for (const auto& cam : train_cams) {
    const RenderOutput r = render(cloud, cam);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (visible[i]) continue;
      const auto& p = cloud.primitives[i];
      const Vec3 pc = cam.world_to_camera(p.mean);
      if (pc.z() <= 0) continue;
      const double u = cam.fx * pc.x() / pc.z() + cam.cx;
      const double v = cam.fy * pc.y() / pc.z() + cam.cy;
      const int px = int(std::floor(u)), py = int(std::floor(v));
      if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
      // A pixel spans several units of depth on slanted surfaces, so the
      // occlusion test is against the farthest depth in the 3x3
      // neighborhood; empty depth means nothing occludes this ray.
      double d = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (r.depth.contains(py + dy, px + dx))
            d = std::max(d, r.depth.at(py + dy, px + dx));
      if (d <= 0 || pc.z() <= d + 3.0 * p.scale.maxCoeff() + depth_tol) visible[i] = 1;
    }
  }

  SplatCloud out;
  out.sh_degree = cloud.sh_degree;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = cfg.jitter_sigma_factor * box.mean_dimension();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!visible[i]) continue;
    GaussianPrimitive p = cloud.primitives[i];
    p.mean += sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    out.primitives.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle persistence

inline void save_bundle(const SceneBundle& bundle, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(fs::path(dir) / "masks");
  save_ply(bundle.background, (fs::path(dir) / "background.ply").string());
  for (std::size_t i = 0; i < bundle.full_clouds.size(); ++i) {
    const std::string tag = std::to_string(i);
    save_ply(bundle.full_clouds[i], (fs::path(dir) / ("full_" + tag + ".ply")).string());
    save_ply(bundle.proxy_clouds[i], (fs::path(dir) / ("proxy_" + tag + ".ply")).string());
    if (!bundle.partial_clouds[i].empty())
      save_ply(bundle.partial_clouds[i],
               (fs::path(dir) / ("partial_" + tag + ".ply")).string());
    for (std::size_t v = 0; v < bundle.masks[i].size(); ++v)
      save_png(bundle.masks[i][v],
               (fs::path(dir) / "masks" /
                ("obj" + tag + "_view" + std::to_string(v) + ".png"))
                   .string());
  }
  save_cameras(bundle.cams, (fs::path(dir) / "cameras.json").string());

  nlohmann::ordered_json gt = nlohmann::ordered_json::array();
  for (const auto& t : bundle.gt_transforms) gt.push_back(transform_to_json(t));
  std::ofstream gt_out((fs::path(dir) / "gt_transforms.json").string());
  gt_out << gt.dump(2) << "\n";

  nlohmann::ordered_json splits;
  splits["train"] = bundle.train_views;
  splits["test"] = bundle.test_views;
  std::ofstream split_out((fs::path(dir) / "splits.json").string());
  split_out << splits.dump(2) << "\n";
}

inline SceneBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(fs::path(dir) / "cameras.json"))
    throw format_error("load_bundle: no cameras.json under " + dir);
  SceneBundle bundle;
  bundle.cams = load_cameras((fs::path(dir) / "cameras.json").string());
  if (fs::exists(fs::path(dir) / "background.ply"))
    bundle.background = load_ply((fs::path(dir) / "background.ply").string());

  for (int i = 0;; ++i) {
    const fs::path full = fs::path(dir) / ("full_" + std::to_string(i) + ".ply");
    if (!fs::exists(full)) break;
    bundle.full_clouds.push_back(load_ply(full.string()));
    bundle.proxy_clouds.push_back(
        load_ply((fs::path(dir) / ("proxy_" + std::to_string(i) + ".ply")).string()));
    const fs::path partial = fs::path(dir) / ("partial_" + std::to_string(i) + ".ply");
    bundle.partial_clouds.push_back(fs::exists(partial) ? load_ply(partial.string())
                                                        : SplatCloud{});
    std::vector<ImageU8> masks;
    for (std::size_t v = 0; v < bundle.cams.size(); ++v)
      masks.push_back(load_png((fs::path(dir) / "masks" /
                                ("obj" + std::to_string(i) + "_view" +
                                 std::to_string(v) + ".png"))
                                   .string()));
    bundle.masks.push_back(std::move(masks));
  }

  std::ifstream gt_in((fs::path(dir) / "gt_transforms.json").string());
  if (gt_in) {
    nlohmann::json gt;
    gt_in >> gt;
    for (const auto& tj : gt) bundle.gt_transforms.push_back(transform_from_json(tj));
  }
  std::ifstream split_in((fs::path(dir) / "splits.json").string());
  if (split_in) {
    nlohmann::json splits;
    split_in >> splits;
    bundle.train_views = splits.at("train").get<std::vector<int>>();
    bundle.test_views = splits.at("test").get<std::vector<int>>();
  }
  return bundle;
}

}  // namespace splatalign
