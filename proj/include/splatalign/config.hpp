// Run configuration: one versioned JSON document covering every module,
// schema-validated with unknown keys rejected.  CLI flags override keys
// through dotted paths.

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include "splatalign/appearance.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/registration.hpp"
#include "splatalign/shape_solver.hpp"
#include "splatalign/synth.hpp"

namespace splatalign {

/// Thrown on schema violations (unknown keys, bad types, bad values).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int version = 1;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = library default (single worker)
  IcpConfig icp;
  RansacConfig ransac;
  ShapeSolverConfig shape;
  IterSchedule schedule;
  bool ransac_filter_shape_pairs = true;
  double shape_filter_min_consensus = 0.3;
  AppearanceConfig appearance;
  DegradeConfig degrade;
  SynthConfig synth;
  double viewsel_lambda_s = 0.5;
  double viewsel_lambda_v = 0.5;
  std::string provider = "ground_truth";  // or "file"
  std::string provider_files;             // glob-free list, ';'-separated
  int provider_pairs = 192;               // ground-truth provider sample size

  AlignLoopConfig align_loop() const {
    AlignLoopConfig cfg;
    cfg.schedule = schedule;
    cfg.ransac = ransac;
    cfg.shape = shape;
    cfg.ransac_filter_shape_pairs = ransac_filter_shape_pairs;
    cfg.shape_filter_min_consensus = shape_filter_min_consensus;
    cfg.seed = seed;
    return cfg;
  }
};

namespace config_detail {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(std::string("config: bad value for '") + key + "'");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw config_error("config: unknown key '" + scope + it.key() + "'");
}

}  // namespace config_detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  using config_detail::read_field;
  using config_detail::reject_unknown;
  RunConfig cfg;
  reject_unknown(j,
                 {"version", "seed", "threads", "icp", "ransac", "shape", "schedule",
                  "appearance", "degrade", "synth", "viewsel", "provider",
                  "provider_files", "provider_pairs"},
                 "");
  read_field(j, "version", cfg.version);
  if (cfg.version != 1) throw config_error("config: unsupported version");
  read_field(j, "seed", cfg.seed);
  read_field(j, "threads", cfg.threads);
  read_field(j, "provider", cfg.provider);
  if (cfg.provider != "ground_truth" && cfg.provider != "file")
    throw config_error("config: provider must be 'ground_truth' or 'file'");
  read_field(j, "provider_files", cfg.provider_files);
  read_field(j, "provider_pairs", cfg.provider_pairs);
  if (cfg.provider_pairs < 3) throw config_error("config: provider_pairs must be >= 3");

  if (j.contains("icp")) {
    const auto& s = j.at("icp");
    reject_unknown(s,
                   {"max_corr_dist_factor", "max_iterations", "n_candidate_rotations",
                    "n_start_rotations", "max_points"},
                   "icp.");
    read_field(s, "max_corr_dist_factor", cfg.icp.max_corr_dist_factor);
    read_field(s, "max_iterations", cfg.icp.max_iterations);
    read_field(s, "n_candidate_rotations", cfg.icp.n_candidate_rotations);
    read_field(s, "n_start_rotations", cfg.icp.n_start_rotations);
    read_field(s, "max_points", cfg.icp.max_points);
    if (cfg.icp.max_corr_dist_factor <= 0 || cfg.icp.max_iterations < 1 ||
        cfg.icp.n_start_rotations > cfg.icp.n_candidate_rotations)
      throw config_error("config: invalid icp settings");
  }
  if (j.contains("ransac")) {
    const auto& s = j.at("ransac");
    reject_unknown(s, {"max_iterations", "inlier_dist_factor", "min_sample"}, "ransac.");
    read_field(s, "max_iterations", cfg.ransac.max_iterations);
    read_field(s, "inlier_dist_factor", cfg.ransac.inlier_dist_factor);
    read_field(s, "min_sample", cfg.ransac.min_sample);
    if (cfg.ransac.max_iterations < 1 || cfg.ransac.inlier_dist_factor <= 0)
      throw config_error("config: invalid ransac settings");
  }
  if (j.contains("shape")) {
    const auto& s = j.at("shape");
    reject_unknown(s,
                   {"s_min", "s_max", "lambda_R", "lambda_S", "iterations",
                    "learning_rate", "beta1", "beta2", "epsilon",
                    "ransac_filter_pairs", "filter_min_consensus"},
                   "shape.");
    read_field(s, "s_min", cfg.shape.s_min);
    read_field(s, "s_max", cfg.shape.s_max);
    read_field(s, "lambda_R", cfg.shape.lambda_R);
    read_field(s, "lambda_S", cfg.shape.lambda_S);
    read_field(s, "iterations", cfg.shape.iterations);
    read_field(s, "learning_rate", cfg.shape.learning_rate);
    read_field(s, "beta1", cfg.shape.beta1);
    read_field(s, "beta2", cfg.shape.beta2);
    read_field(s, "epsilon", cfg.shape.epsilon);
    read_field(s, "ransac_filter_pairs", cfg.ransac_filter_shape_pairs);
    read_field(s, "filter_min_consensus", cfg.shape_filter_min_consensus);
    if (!(cfg.shape.s_min > 0 && cfg.shape.s_min < cfg.shape.s_max) ||
        cfg.shape.lambda_R < 0 || cfg.shape.lambda_S < 0)
      throw config_error("config: invalid shape settings");
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    reject_unknown(s, {"total_iterations", "shape_iterations"}, "schedule.");
    read_field(s, "total_iterations", cfg.schedule.total_iterations);
    read_field(s, "shape_iterations", cfg.schedule.shape_iterations);
    try {
      cfg.schedule.validate();
    } catch (const invalid_argument_error& e) {
      throw config_error(std::string("config: ") + e.what());
    }
  }
  if (j.contains("appearance")) {
    const auto& s = j.at("appearance");
    reject_unknown(s,
                   {"lambda", "iterations", "ssim_window", "ssim_sigma", "c1", "c2",
                    "learning_rate", "beta1", "beta2", "epsilon"},
                   "appearance.");
    read_field(s, "lambda", cfg.appearance.lambda);
    read_field(s, "iterations", cfg.appearance.iterations);
    read_field(s, "ssim_window", cfg.appearance.ssim_window);
    read_field(s, "ssim_sigma", cfg.appearance.ssim_sigma);
    read_field(s, "c1", cfg.appearance.c1);
    read_field(s, "c2", cfg.appearance.c2);
    read_field(s, "learning_rate", cfg.appearance.learning_rate);
    read_field(s, "beta1", cfg.appearance.beta1);
    read_field(s, "beta2", cfg.appearance.beta2);
    read_field(s, "epsilon", cfg.appearance.epsilon);
    if (cfg.appearance.lambda < 0 || cfg.appearance.lambda > 1 ||
        cfg.appearance.ssim_window % 2 == 0)
      throw config_error("config: invalid appearance settings");
  }
  if (j.contains("degrade")) {
    const auto& s = j.at("degrade");
    reject_unknown(s, {"drop_fraction", "jitter_sigma_factor"}, "degrade.");
    read_field(s, "drop_fraction", cfg.degrade.drop_fraction);
    read_field(s, "jitter_sigma_factor", cfg.degrade.jitter_sigma_factor);
    if (!(cfg.degrade.drop_fraction >= 0 && cfg.degrade.drop_fraction < 1))
      throw config_error("config: degrade.drop_fraction outside [0,1)");
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    reject_unknown(s,
                   {"n_objects", "n_views", "image_size", "points_per_object",
                    "sh_degree", "min_object_size", "max_object_size",
                    "placement_radius", "plane_half_extent", "ring_radius",
                    "ring_height", "proxy_albedo_jitter", "placement_retries"},
                   "synth.");
    read_field(s, "n_objects", cfg.synth.n_objects);
    read_field(s, "n_views", cfg.synth.n_views);
    read_field(s, "image_size", cfg.synth.image_size);
    read_field(s, "points_per_object", cfg.synth.points_per_object);
    read_field(s, "sh_degree", cfg.synth.sh_degree);
    read_field(s, "min_object_size", cfg.synth.min_object_size);
    read_field(s, "max_object_size", cfg.synth.max_object_size);
    read_field(s, "placement_radius", cfg.synth.placement_radius);
    read_field(s, "plane_half_extent", cfg.synth.plane_half_extent);
    read_field(s, "ring_radius", cfg.synth.ring_radius);
    read_field(s, "ring_height", cfg.synth.ring_height);
    read_field(s, "proxy_albedo_jitter", cfg.synth.proxy_albedo_jitter);
    read_field(s, "placement_retries", cfg.synth.placement_retries);
    if (cfg.synth.n_objects < 1 || cfg.synth.n_views < 2 ||
        cfg.synth.sh_degree < 0 || cfg.synth.sh_degree > 3)
      throw config_error("config: invalid synth settings");
  }
  if (j.contains("viewsel")) {
    const auto& s = j.at("viewsel");
    reject_unknown(s, {"lambda_s", "lambda_v"}, "viewsel.");
    read_field(s, "lambda_s", cfg.viewsel_lambda_s);
    read_field(s, "lambda_v", cfg.viewsel_lambda_v);
  }
  return cfg;
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["provider"] = cfg.provider;
  j["provider_files"] = cfg.provider_files;
  j["provider_pairs"] = cfg.provider_pairs;
  j["icp"] = {{"max_corr_dist_factor", cfg.icp.max_corr_dist_factor},
              {"max_iterations", cfg.icp.max_iterations},
              {"n_candidate_rotations", cfg.icp.n_candidate_rotations},
              {"n_start_rotations", cfg.icp.n_start_rotations},
              {"max_points", cfg.icp.max_points}};
  j["ransac"] = {{"max_iterations", cfg.ransac.max_iterations},
                 {"inlier_dist_factor", cfg.ransac.inlier_dist_factor},
                 {"min_sample", cfg.ransac.min_sample}};
  j["shape"] = {{"s_min", cfg.shape.s_min},
                {"s_max", cfg.shape.s_max},
                {"lambda_R", cfg.shape.lambda_R},
                {"lambda_S", cfg.shape.lambda_S},
                {"iterations", cfg.shape.iterations},
                {"learning_rate", cfg.shape.learning_rate},
                {"beta1", cfg.shape.beta1},
                {"beta2", cfg.shape.beta2},
                {"epsilon", cfg.shape.epsilon},
                {"ransac_filter_pairs", cfg.ransac_filter_shape_pairs},
                {"filter_min_consensus", cfg.shape_filter_min_consensus}};
  j["schedule"] = {{"total_iterations", cfg.schedule.total_iterations},
                   {"shape_iterations", cfg.schedule.shape_iterations}};
  j["appearance"] = {{"lambda", cfg.appearance.lambda},
                     {"iterations", cfg.appearance.iterations},
                     {"ssim_window", cfg.appearance.ssim_window},
                     {"ssim_sigma", cfg.appearance.ssim_sigma},
                     {"c1", cfg.appearance.c1},
                     {"c2", cfg.appearance.c2},
                     {"learning_rate", cfg.appearance.learning_rate},
                     {"beta1", cfg.appearance.beta1},
                     {"beta2", cfg.appearance.beta2},
                     {"epsilon", cfg.appearance.epsilon}};
  j["degrade"] = {{"drop_fraction", cfg.degrade.drop_fraction},
                  {"jitter_sigma_factor", cfg.degrade.jitter_sigma_factor}};
  j["synth"] = {{"n_objects", cfg.synth.n_objects},
                {"n_views", cfg.synth.n_views},
                {"image_size", cfg.synth.image_size},
                {"points_per_object", cfg.synth.points_per_object},
                {"sh_degree", cfg.synth.sh_degree},
                {"min_object_size", cfg.synth.min_object_size},
                {"max_object_size", cfg.synth.max_object_size},
                {"placement_radius", cfg.synth.placement_radius},
                {"plane_half_extent", cfg.synth.plane_half_extent},
                {"ring_radius", cfg.synth.ring_radius},
                {"ring_height", cfg.synth.ring_height},
                {"proxy_albedo_jitter", cfg.synth.proxy_albedo_jitter},
                {"placement_retries", cfg.synth.placement_retries}};
  j["viewsel"] = {{"lambda_s", cfg.viewsel_lambda_s}, {"lambda_v", cfg.viewsel_lambda_v}};
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config: parse failure: " + std::string(e.what()));
  }
  return config_from_json(j);
}

/// Applies one `dotted.path=value` override onto a config JSON document.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw config_error("config: override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw config_error("config: empty key in override path");
    if (dot == std::string::npos) {
      nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace splatalign
