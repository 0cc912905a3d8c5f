// 3D-3D correspondences between proxy and partial objects: mutual
// nearest-neighbor matching over masked descriptor maps, depth lifting,
// a ground-truth provider for synthetic runs and JSON import/export.
// Real feature extraction stays outside the library; everything enters
// through these interfaces.

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "splatalign/image.hpp"
#include "splatalign/render.hpp"
#include "splatalign/types.hpp"

namespace splatalign {

/// Dense per-pixel descriptors.
struct FeatureMap {
  int width = 0, height = 0, dim = 0;
  std::vector<double> data;  // row-major, dim values per pixel

  FeatureMap() = default;
  FeatureMap(int w, int h, int d)
      : width(w), height(h), dim(d), data(std::size_t(w) * h * d, 0.0) {}

  double* descriptor(int y, int x) {
    return &data[(std::size_t(y) * width + x) * dim];
  }
  const double* descriptor(int y, int x) const {
    return &data[(std::size_t(y) * width + x) * dim];
  }
};

struct Match2D {
  Eigen::Vector2i u_gen = Eigen::Vector2i::Zero();
  Eigen::Vector2i u_par = Eigen::Vector2i::Zero();
  double confidence = 0.0;
};

/// Mutual nearest-neighbor matching under cosine similarity; candidate
/// pixels on the partial side are restricted to the mask.  Returns at most
/// `top_k` pairs sorted by descending confidence.
inline std::vector<Match2D> mutual_nn_match(const FeatureMap& f_gen,
                                            const FeatureMap& f_par, const ImageU8& mask,
                                            int top_k = 16) {
  if (f_gen.dim != f_par.dim)
    throw invalid_argument_error("mutual_nn_match: descriptor dimensions differ");
  if (mask.width != f_par.width || mask.height != f_par.height)
    throw invalid_argument_error("mutual_nn_match: mask size does not match f_par");

  const int dim = f_gen.dim;
  auto normalized = [&](const FeatureMap& f) {
    std::vector<double> out(f.data.size());
    std::vector<char> ok(std::size_t(f.width) * f.height, 0);
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x) {
        const double* d = f.descriptor(y, x);
        double n2 = 0;
        for (int k = 0; k < dim; ++k) n2 += d[k] * d[k];
        const std::size_t pix = std::size_t(y) * f.width + x;
        if (n2 < 1e-24) continue;
        ok[pix] = 1;
        const double inv = 1.0 / std::sqrt(n2);
        for (int k = 0; k < dim; ++k) out[pix * dim + k] = d[k] * inv;
      }
    return std::make_pair(std::move(out), std::move(ok));
  };
  const auto [gen_n, gen_ok] = normalized(f_gen);
  const auto [par_n, par_ok] = normalized(f_par);

  std::vector<int> par_pixels;
  for (int y = 0; y < f_par.height; ++y)
    for (int x = 0; x < f_par.width; ++x)
      if (mask.at(y, x) && par_ok[std::size_t(y) * f_par.width + x])
        par_pixels.push_back(y * f_par.width + x);
  if (par_pixels.empty()) return {};

  const std::size_t n_gen = std::size_t(f_gen.width) * f_gen.height;
  auto cos_sim = [&](std::size_t g, std::size_t p) {
    const double* a = &gen_n[g * dim];
    const double* b = &par_n[p * dim];
    double s = 0;
    for (int k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
  };

  // Best partial pixel for every gen pixel, then verify mutuality.
  std::vector<int> best_par(n_gen, -1);
  std::vector<double> best_par_sim(n_gen, -2.0);
  for (std::size_t g = 0; g < n_gen; ++g) {
    if (!gen_ok[g]) continue;
    for (int p : par_pixels) {
      const double s = cos_sim(g, std::size_t(p));
      if (s > best_par_sim[g]) best_par_sim[g] = s, best_par[g] = p;
    }
  }
  std::vector<int> best_gen(std::size_t(f_par.width) * f_par.height, -1);
  for (int p : par_pixels) {
    double best = -2.0;
    for (std::size_t g = 0; g < n_gen; ++g) {
      if (!gen_ok[g]) continue;
      const double s = cos_sim(g, std::size_t(p));
      if (s > best) best = s, best_gen[p] = static_cast<int>(g);
    }
  }

  std::vector<Match2D> matches;
  for (std::size_t g = 0; g < n_gen; ++g) {
    const int p = best_par[g];
    if (p < 0 || best_gen[p] != static_cast<int>(g)) continue;
    Match2D m;
    m.u_gen = Eigen::Vector2i(int(g) % f_gen.width, int(g) / f_gen.width);
    m.u_par = Eigen::Vector2i(p % f_par.width, p / f_par.width);
    m.confidence = best_par_sim[g];
    matches.push_back(m);
  }
  std::stable_sort(matches.begin(), matches.end(),
                   [](const Match2D& a, const Match2D& b) {
                     return a.confidence > b.confidence;
                   });
  if (static_cast<int>(matches.size()) > top_k) matches.resize(top_k);
  return matches;
}

struct LiftResult {
  std::vector<Corr3D> pairs;
  int dropped = 0;  // matches discarded for missing depth
};

/// Unprojects matched pixels on both sides with the same camera.  Matches
/// hitting a zero-depth pixel are dropped, not fatal.
inline LiftResult lift_matches(const std::vector<Match2D>& matches, const ImageD& d_gen,
                               const ImageD& d_par, const Camera& cam) {
  LiftResult out;
  for (const auto& m : matches) {
    const Vec2 ug(m.u_gen.x() + 0.5, m.u_gen.y() + 0.5);
    const Vec2 up(m.u_par.x() + 0.5, m.u_par.y() + 0.5);
    try {
      Corr3D c;
      c.p_gen = unproject(ug, d_gen, cam);
      c.p_par = unproject(up, d_par, cam);
      c.confidence = m.confidence;
      out.pairs.push_back(c);
    } catch (const no_depth_error&) {
      ++out.dropped;
    }
  }
  return out;
}

/// Synthetic correspondence generator: samples primitive means, maps them
/// through `T` with optional Gaussian noise, and replaces a fraction with
/// outliers drawn uniformly from the target-side bounding box.
inline std::vector<Corr3D> synth_correspondences(const SplatCloud& cloud,
                                                 const AnisotropicTransform& T, int n,
                                                 double noise_sigma,
                                                 double outlier_fraction,
                                                 std::uint64_t seed) {
  if (n < 3) throw invalid_argument_error("synth_correspondences: n must be >= 3");
  if (cloud.empty()) throw invalid_argument_error("synth_correspondences: empty cloud");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0))
    throw invalid_argument_error("synth_correspondences: outlier_fraction outside [0,1)");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(cloud.size()) - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Aabb target_box;
  for (const auto& p : cloud.primitives) target_box.expand(T.apply(p.mean));

  std::vector<Corr3D> pairs(n);
  for (int i = 0; i < n; ++i) {
    pairs[i].p_gen = cloud.primitives[pick(rng)].mean;
    pairs[i].p_par = T.apply(pairs[i].p_gen);
    if (noise_sigma > 0)
      pairs[i].p_par += noise_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
  }

  const int n_outliers = static_cast<int>(std::llround(outlier_fraction * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> ux(target_box.min.x(), target_box.max.x());
  std::uniform_real_distribution<double> uy(target_box.min.y(), target_box.max.y());
  std::uniform_real_distribution<double> uz(target_box.min.z(), target_box.max.z());
  for (int k = 0; k < n_outliers; ++k)
    pairs[order[k]].p_par = Vec3(ux(rng), uy(rng), uz(rng));
  return pairs;
}

/// Equidistant view subsampling with step |views| / max_used.
inline std::vector<int> subsample_views(int n_views, int max_used = 15) {
  if (n_views < 1) throw invalid_argument_error("subsample_views: n_views must be >= 1");
  const int step = std::max(1, n_views / std::max(1, max_used));
  std::vector<int> idx;
  for (int i = 0; i < n_views; i += step) idx.push_back(i);
  return idx;
}

template <typename T>
struct CropResult {
  Image<T> image;
  Eigen::Vector2i offset;  // output (x, y) maps to input (x + offset.x, y + offset.y)
};

/// Crops to the mask bounding box and pads each side; coordinates map back
/// through the returned offset.
template <typename T>
inline CropResult<T> crop_and_pad(const Image<T>& image, const ImageU8& mask,
                                  int pad = 200) {
  if (image.width != mask.width || image.height != mask.height)
    throw invalid_argument_error("crop_and_pad: image/mask size mismatch");
  int x0 = mask.width, x1 = -1, y0 = mask.height, y1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) throw invalid_argument_error("crop_and_pad: empty mask");

  CropResult<T> out;
  out.offset = Eigen::Vector2i(x0 - pad, y0 - pad);
  out.image = Image<T>(x1 - x0 + 1 + 2 * pad, y1 - y0 + 1 + 2 * pad, image.channels);
  for (int y = 0; y < out.image.height; ++y) {
    const int sy = y + out.offset.y();
    if (sy < 0 || sy >= image.height) continue;
    for (int x = 0; x < out.image.width; ++x) {
      const int sx = x + out.offset.x();
      if (sx < 0 || sx >= image.width) continue;
      for (int c = 0; c < image.channels; ++c) out.image.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correspondence JSON and feature map files

inline void save_correspondences(const std::vector<Corr3D>& pairs, int view_index,
                                 const std::string& path) {
  nlohmann::ordered_json j;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& c : pairs) {
    j["pairs"].push_back({{"p_gen", {c.p_gen.x(), c.p_gen.y(), c.p_gen.z()}},
                          {"p_par", {c.p_par.x(), c.p_par.y(), c.p_par.z()}},
                          {"confidence", c.confidence}});
  }
  j["view_index"] = view_index;
  std::ofstream out(path);
  if (!out) throw format_error("save_correspondences: cannot open " + path);
  out << j.dump(2) << "\n";
}

struct CorrespondenceFile {
  std::vector<Corr3D> pairs;
  int view_index = -1;
};

inline CorrespondenceFile load_correspondences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("load_correspondences: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("load_correspondences: " + std::string(e.what()));
  }
  CorrespondenceFile out;
  out.view_index = j.value("view_index", -1);
  for (const auto& p : j.at("pairs")) {
    Corr3D c;
    for (int i = 0; i < 3; ++i) {
      c.p_gen[i] = p.at("p_gen").at(i).get<double>();
      c.p_par[i] = p.at("p_par").at(i).get<double>();
    }
    c.confidence = p.value("confidence", 1.0);
    out.pairs.push_back(c);
  }
  return out;
}

inline void save_feature_map(const FeatureMap& f, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error("save_feature_map: cannot open " + path);
  const char magic[4] = {'S', 'A', 'F', 'M'};
  out.write(magic, 4);
  const std::int32_t dims[3] = {f.width, f.height, f.dim};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> buf(f.data.begin(), f.data.end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size() * sizeof(float)));
}

inline FeatureMap load_feature_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("load_feature_map: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SAFM")
    throw format_error("load_feature_map: bad magic in " + path);
  std::int32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    throw format_error("load_feature_map: bad header in " + path);
  FeatureMap f(dims[0], dims[1], dims[2]);
  std::vector<float> buf(f.data.size());
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
  if (!in) throw format_error("load_feature_map: truncated data in " + path);
  std::copy(buf.begin(), buf.end(), f.data.begin());
  return f;
}

// ---------------------------------------------------------------------------
// Correspondence providers for the iterative alignment loop

struct ProviderContext {
  const SplatCloud* current_gen = nullptr;
  const SplatCloud* partial = nullptr;
  const std::vector<Camera>* cams = nullptr;
  const std::vector<ImageU8>* masks = nullptr;
  int iteration = 0;  // 1-based
  /// Maps a point from the gen object's frame at loop entry to its
  /// current frame (composition of all transforms applied so far).
  std::function<Vec3(const Vec3&)> cumulative;
};

class CorrespondenceProvider {
 public:
  virtual ~CorrespondenceProvider() = default;
  virtual std::vector<Corr3D> gather(const ProviderContext& ctx) = 0;
};

/// Provider backed by planted ground truth: pairs the current position of
/// sampled gen points with their known targets.  Optional noise and
/// outliers are re-drawn per iteration from the seed.
class GroundTruthProvider final : public CorrespondenceProvider {
 public:
  GroundTruthProvider(const SplatCloud& gen_at_entry, const AnisotropicTransform& target,
                      int n_pairs, std::uint64_t seed, double noise_sigma = 0.0,
                      double outlier_fraction = 0.0)
      : noise_sigma_(noise_sigma), outlier_fraction_(outlier_fraction), seed_(seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(gen_at_entry.size()) - 1);
    const int n = std::min<int>(n_pairs, static_cast<int>(gen_at_entry.size()));
    for (int i = 0; i < n; ++i) {
      const Vec3 p = gen_at_entry.primitives[pick(rng)].mean;
      sources_.push_back(p);
      targets_.push_back(target.apply(p));
    }
    box_ = Aabb::of_points(targets_);
  }

  std::vector<Corr3D> gather(const ProviderContext& ctx) override {
    std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ull * std::uint64_t(ctx.iteration)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Corr3D> pairs(sources_.size());
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      pairs[i].p_gen = ctx.cumulative ? ctx.cumulative(sources_[i]) : sources_[i];
      pairs[i].p_par = targets_[i];
      if (noise_sigma_ > 0)
        pairs[i].p_par += noise_sigma_ * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (outlier_fraction_ > 0) {
      const int n_out =
          static_cast<int>(std::llround(outlier_fraction_ * double(pairs.size())));
      std::vector<int> order(pairs.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::uniform_real_distribution<double> ux(box_.min.x(), box_.max.x());
      std::uniform_real_distribution<double> uy(box_.min.y(), box_.max.y());
      std::uniform_real_distribution<double> uz(box_.min.z(), box_.max.z());
      for (int k = 0; k < n_out; ++k)
        pairs[order[k]].p_par = Vec3(ux(rng), uy(rng), uz(rng));
    }
    return pairs;
  }

 private:
  std::vector<Vec3> sources_;
  std::vector<Vec3> targets_;
  Aabb box_;
  double noise_sigma_;
  double outlier_fraction_;
  std::uint64_t seed_;
};

/// Provider reading correspondence JSON files produced by an external
/// matcher; stored gen points are interpreted in the loop-entry frame.
class FileProvider final : public CorrespondenceProvider {
 public:
  explicit FileProvider(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
      const auto file = load_correspondences(p);
      pairs_.insert(pairs_.end(), file.pairs.begin(), file.pairs.end());
    }
  }

  std::vector<Corr3D> gather(const ProviderContext& ctx) override {
    std::vector<Corr3D> out = pairs_;
    if (ctx.cumulative)
      for (auto& c : out) c.p_gen = ctx.cumulative(c.p_gen);
    return out;
  }

 private:
  std::vector<Corr3D> pairs_;
};

}  // namespace splatalign
