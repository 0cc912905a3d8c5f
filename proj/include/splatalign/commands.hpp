// Command layer behind the CLI: every subcommand is a plain function over
// a RunConfig so runs are reproducible and directly testable.

#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "splatalign/appearance.hpp"
#include "splatalign/config.hpp"
#include "splatalign/correspond.hpp"
#include "splatalign/json_io.hpp"
#include "splatalign/metrics.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/registration.hpp"
#include "splatalign/render.hpp"
#include "splatalign/synth.hpp"
#include "splatalign/viewsel.hpp"

namespace splatalign {

namespace fs = std::filesystem;

/// Generates a bundle (scene, splits, degraded partials) and writes it with
/// a deterministic manifest.
inline SceneBundle cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
  SceneBundle bundle = gen_scene(cfg.synth, cfg.seed);
  auto [train, test] = drop_views(bundle.cams, cfg.degrade, cfg.seed);
  bundle.train_views = train;
  bundle.test_views = test;
  std::vector<Camera> train_cams;
  for (int i : train) train_cams.push_back(bundle.cams[i]);
  for (std::size_t i = 0; i < bundle.full_clouds.size(); ++i)
    bundle.partial_clouds[i] =
        degrade_object(bundle.full_clouds[i], train_cams, cfg.degrade,
                       cfg.seed ^ (0x51ed270b8d6eull + i));

  save_bundle(bundle, out_dir);

  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_to_json(cfg);
  manifest["n_objects"] = bundle.full_clouds.size();
  manifest["n_views"] = bundle.cams.size();
  manifest["train_views"] = bundle.train_views;
  manifest["test_views"] = bundle.test_views;
  nlohmann::ordered_json objects = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < bundle.full_clouds.size(); ++i)
    objects.push_back({{"full_primitives", bundle.full_clouds[i].size()},
                       {"partial_primitives", bundle.partial_clouds[i].size()},
                       {"proxy_primitives", bundle.proxy_clouds[i].size()}});
  manifest["objects"] = objects;
  std::ofstream out((fs::path(out_dir) / "manifest.json").string());
  if (!out) throw format_error("cmd_synth: cannot write manifest");
  out << manifest.dump(2) << "\n";
  return bundle;
}

struct AlignOutcome {
  SimilarityTransform coarse;
  AlignResult loop;
};

/// Coarse alignment followed by the iterative pose/shape loop; writes the
/// aligned PLY, a per-iteration JSONL report and the final transform.
inline AlignOutcome cmd_align(const RunConfig& cfg, const std::string& bundle_dir,
                              int object_id, const std::string& out_dir) {
  const SceneBundle bundle = load_bundle(bundle_dir);
  if (object_id < 0 || object_id >= static_cast<int>(bundle.full_clouds.size()))
    throw invalid_argument_error("cmd_align: object " + std::to_string(object_id) +
                                 " not found in bundle");
  const SplatCloud& proxy = bundle.proxy_clouds[object_id];
  const SplatCloud& partial = bundle.partial_clouds[object_id];
  if (partial.empty())
    throw invalid_argument_error("cmd_align: bundle has no partial cloud for object " +
                                 std::to_string(object_id));

  AlignOutcome outcome;
  outcome.coarse = coarse_align(proxy, partial, cfg.icp, cfg.seed);
  const SplatCloud gen1 = apply_similarity(proxy, outcome.coarse);

  std::unique_ptr<CorrespondenceProvider> provider;
  if (cfg.provider == "ground_truth") {
    if (bundle.gt_transforms.empty())
      throw invalid_argument_error("cmd_align: bundle has no gt_transforms");
    const AnisotropicTransform& gt = bundle.gt_transforms[object_id];
    const Mat3 A =
        gt.linear() * (outcome.coarse.rotation.transpose() / outcome.coarse.scale);
    const Vec3 t = gt.translation - A * outcome.coarse.translation;
    provider = std::make_unique<GroundTruthProvider>(
        gen1, anisotropic_from_linear(A, t), cfg.provider_pairs, cfg.seed);
  } else {
    std::vector<std::string> files;
    std::stringstream ss(cfg.provider_files);
    for (std::string item; std::getline(ss, item, ';');)
      if (!item.empty()) files.push_back(item);
    if (files.empty())
      throw invalid_argument_error("cmd_align: file provider needs provider_files");
    provider = std::make_unique<FileProvider>(files);
  }

  outcome.loop = iterative_align(gen1, partial, bundle.cams, bundle.masks[object_id],
                                 *provider, cfg.align_loop());

  fs::create_directories(out_dir);
  const std::string tag = std::to_string(object_id);
  save_ply(outcome.loop.aligned, (fs::path(out_dir) / ("aligned_" + tag + ".ply")).string());

  std::ofstream report((fs::path(out_dir) / ("align_report_" + tag + ".jsonl")).string());
  if (!report) throw format_error("cmd_align: cannot write report");
  for (const auto& r : outcome.loop.reports) {
    nlohmann::ordered_json line;
    line["iter"] = r.iteration;
    line["mode"] = r.mode;
    line["skipped"] = r.skipped;
    line["n_pairs"] = r.n_pairs;
    line["n_inliers"] = r.n_inliers;
    line["residual"] = r.residual;
    line["transform"] = transform_to_json(r.transform);
    report << line.dump() << "\n";
  }

  nlohmann::ordered_json final_json;
  final_json["coarse"] = {{"rotation", mat3_to_json(outcome.coarse.rotation)},
                          {"translation", vec3_to_json(outcome.coarse.translation)},
                          {"scale", outcome.coarse.scale}};
  final_json["loop_linear"] = mat3_to_json(outcome.loop.cumulative_linear);
  final_json["loop_translation"] = vec3_to_json(outcome.loop.cumulative_translation);
  std::ofstream final_out((fs::path(out_dir) / ("final_transform_" + tag + ".json")).string());
  final_out << final_json.dump(2) << "\n";
  return outcome;
}

/// Appearance refinement of an aligned object against its training views;
/// the targets are the object's ground-truth renders, masked.
inline RefineResult cmd_refine(const RunConfig& cfg, const std::string& bundle_dir,
                               int object_id, const std::string& aligned_ply,
                               const std::string& out_dir) {
  const SceneBundle bundle = load_bundle(bundle_dir);
  if (object_id < 0 || object_id >= static_cast<int>(bundle.full_clouds.size()))
    throw invalid_argument_error("cmd_refine: object " + std::to_string(object_id) +
                                 " not found in bundle");
  if (bundle.train_views.empty())
    throw invalid_argument_error("cmd_refine: bundle has no train/test split");
  const SplatCloud aligned = load_ply(aligned_ply);

  std::vector<Camera> cams;
  std::vector<ImageD> targets;
  std::vector<ImageU8> masks;
  for (int v : bundle.train_views) {
    cams.push_back(bundle.cams[v]);
    targets.push_back(render(bundle.full_clouds[object_id], bundle.cams[v]).color);
    masks.push_back(bundle.masks[object_id][v]);
  }

  RefineResult result = refine_sh(aligned, cams, targets, masks, cfg.appearance);
  fs::create_directories(out_dir);
  const std::string tag = std::to_string(object_id);
  save_ply(result.cloud, (fs::path(out_dir) / ("refined_" + tag + ".ply")).string());
  save_loss_trace(result.trace, (fs::path(out_dir) / ("loss_" + tag + ".csv")).string());
  return result;
}

struct EvalResult {
  double cd_partial = 0, emd_partial = 0;
  double cd_aligned = 0, emd_aligned = 0;
  double miou_aligned = 0;
};

/// Metrics against the ground-truth full cloud on the test split: Chamfer
/// and EMD for the partial baseline and the aligned/refined result, plus
/// mask mIoU over test views.  Also writes test-view renders.
inline EvalResult cmd_eval(const RunConfig& cfg, const std::string& bundle_dir,
                           int object_id, const std::string& result_ply,
                           const std::string& out_dir) {
  (void)cfg;
  const SceneBundle bundle = load_bundle(bundle_dir);
  if (object_id < 0 || object_id >= static_cast<int>(bundle.full_clouds.size()))
    throw invalid_argument_error("cmd_eval: object " + std::to_string(object_id) +
                                 " not found in bundle");
  if (bundle.test_views.empty())
    throw invalid_argument_error("cmd_eval: bundle has no test split");
  const SplatCloud result = load_ply(result_ply);
  const SplatCloud& full = bundle.full_clouds[object_id];
  const SplatCloud& partial = bundle.partial_clouds[object_id];
  if (partial.empty())
    throw invalid_argument_error("cmd_eval: bundle has no partial cloud for object " +
                                 std::to_string(object_id));

  EvalResult metrics;
  metrics.cd_aligned = chamfer(result.means(), full.means());
  metrics.emd_aligned = emd(result.means(), full.means());
  metrics.cd_partial = chamfer(partial.means(), full.means());
  metrics.emd_partial = emd(partial.means(), full.means());

  fs::create_directories(out_dir);
  std::vector<ImageU8> pred_masks, gt_masks;
  for (int v : bundle.test_views) {
    const RenderOutput pred = render(result, bundle.cams[v]);
    const RenderOutput gt = render(full, bundle.cams[v]);
    ImageU8 pm(pred.alpha.width, pred.alpha.height, 1), gm = pm;
    for (std::size_t i = 0; i < pm.data.size(); ++i) {
      pm.data[i] = pred.alpha.data[i] > 0.3 ? 255 : 0;
      gm.data[i] = gt.alpha.data[i] > 0.3 ? 255 : 0;
    }
    pred_masks.push_back(pm);
    gt_masks.push_back(gm);
    save_png(to_srgb8(pred.color),
             (fs::path(out_dir) / ("render_obj" + std::to_string(object_id) + "_view" +
                                   std::to_string(v) + ".png"))
                 .string());
  }
  metrics.miou_aligned = miou(pred_masks, gt_masks);

  nlohmann::ordered_json j;
  j["object"] = object_id;
  j["cd_partial_vs_full"] = metrics.cd_partial;
  j["emd_partial_vs_full"] = metrics.emd_partial;
  j["cd_result_vs_full"] = metrics.cd_aligned;
  j["emd_result_vs_full"] = metrics.emd_aligned;
  j["cd_improvement_ratio"] =
      metrics.cd_partial > 0 ? metrics.cd_aligned / metrics.cd_partial : 0.0;
  j["miou_test_views"] = metrics.miou_aligned;
  std::ofstream out(
      (fs::path(out_dir) / ("metrics_" + std::to_string(object_id) + ".json")).string());
  if (!out) throw format_error("cmd_eval: cannot write metrics");
  out << j.dump(2) << "\n";
  return metrics;
}

/// Renders one view of a PLY to PNG (and optionally depth PFM / alpha PNG).
inline void cmd_render(const std::string& ply_path, const std::string& cameras_path,
                       int view, const std::string& out_png,
                       const std::string& out_depth_pfm = "",
                       const std::string& out_alpha_png = "") {
  const SplatCloud cloud = load_ply(ply_path);
  const auto cams = load_cameras(cameras_path);
  if (view < 0 || view >= static_cast<int>(cams.size()))
    throw invalid_argument_error("cmd_render: view index out of range");
  const RenderOutput r = render(cloud, cams[view]);
  save_png(to_srgb8(r.color), out_png);
  if (!out_depth_pfm.empty()) save_pfm(r.depth, out_depth_pfm);
  if (!out_alpha_png.empty()) {
    ImageU8 alpha(r.alpha.width, r.alpha.height, 1);
    for (std::size_t i = 0; i < alpha.data.size(); ++i)
      alpha.data[i] = static_cast<std::uint8_t>(
          std::lround(std::clamp(r.alpha.data[i], 0.0, 1.0) * 255.0));
    save_png(alpha, out_alpha_png);
  }
}

/// Greedy view selection over an object's masks; emits indices + scores.
inline ViewSelection cmd_select_views(const RunConfig& cfg, const std::string& bundle_dir,
                                      int object_id, int k, const std::string& out_path) {
  const SceneBundle bundle = load_bundle(bundle_dir);
  if (object_id < 0 || object_id >= static_cast<int>(bundle.masks.size()))
    throw invalid_argument_error("cmd_select_views: object not found");
  const auto sel = select_views(bundle.masks[object_id], bundle.cams, k,
                                cfg.viewsel_lambda_s, cfg.viewsel_lambda_v);
  nlohmann::ordered_json j;
  j["selected"] = sel.indices;
  j["survivors"] = sel.survivors;
  nlohmann::ordered_json scores = nlohmann::ordered_json::array();
  for (const auto& s : sel.scores)
    scores.push_back(
        {{"q_shape", s.q_shape}, {"q_view", s.q_view}, {"q_total", s.q_total}});
  j["scores"] = scores;
  std::ofstream out(out_path);
  if (!out) throw format_error("cmd_select_views: cannot write " + out_path);
  out << j.dump(2) << "\n";
  return sel;
}

/// Gradient-voting segmentation of one object out of the assembled scene
/// (background plus all objects).
inline std::vector<int> cmd_segment_vote(const std::string& bundle_dir, int object_id,
                                         const std::string& out_ply) {
  const SceneBundle bundle = load_bundle(bundle_dir);
  if (object_id < 0 || object_id >= static_cast<int>(bundle.masks.size()))
    throw invalid_argument_error("cmd_segment_vote: object not found");

  SplatCloud scene = bundle.background;
  for (const auto& cloud : bundle.full_clouds)
    scene.primitives.insert(scene.primitives.end(), cloud.primitives.begin(),
                            cloud.primitives.end());
  scene.sh_degree = bundle.background.sh_degree;

  const auto selected =
      gradient_vote_segment(scene, bundle.cams, bundle.masks[object_id]);
  if (!out_ply.empty()) save_ply(extract_primitives(scene, selected), out_ply);
  return selected;
}

/// Mutual nearest-neighbor matching of two descriptor maps followed by
/// depth lifting; writes a correspondence JSON.
inline LiftResult cmd_match(const std::string& f_gen_path, const std::string& f_par_path,
                            const std::string& mask_png, const std::string& d_gen_pfm,
                            const std::string& d_par_pfm, const std::string& cameras_path,
                            int view, int top_k, const std::string& out_json) {
  const FeatureMap f_gen = load_feature_map(f_gen_path);
  const FeatureMap f_par = load_feature_map(f_par_path);
  const ImageU8 mask = load_png(mask_png);
  const ImageD d_gen = load_pfm(d_gen_pfm);
  const ImageD d_par = load_pfm(d_par_pfm);
  const auto cams = load_cameras(cameras_path);
  if (view < 0 || view >= static_cast<int>(cams.size()))
    throw invalid_argument_error("cmd_match: view index out of range");

  const auto matches = mutual_nn_match(f_gen, f_par, mask, top_k);
  const LiftResult lifted = lift_matches(matches, d_gen, d_par, cams[view]);
  save_correspondences(lifted.pairs, view, out_json);
  return lifted;
}

}  // namespace splatalign
