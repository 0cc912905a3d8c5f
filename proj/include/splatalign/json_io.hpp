// JSON serialization of cameras and transforms (row-major matrices).

#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "splatalign/types.hpp"

namespace splatalign {

inline nlohmann::ordered_json mat3_to_json(const Mat3& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) j.push_back(m(r, c));
  return j;
}

inline Mat3 mat3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 9)
    throw format_error("expected a 9-element row-major matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(r * 3 + c).get<double>();
  return m;
}

inline nlohmann::ordered_json vec3_to_json(const Vec3& v) {
  return nlohmann::ordered_json::array({v.x(), v.y(), v.z()});
}

inline Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw format_error("expected a 3-vector");
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

inline nlohmann::ordered_json camera_to_json(const Camera& cam) {
  nlohmann::ordered_json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["R"] = mat3_to_json(cam.rotation);
  j["t"] = vec3_to_json(cam.translation);
  return j;
}

inline Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.rotation = mat3_from_json(j.at("R"));
  cam.translation = vec3_from_json(j.at("t"));
  cam.validate();
  return cam;
}

inline void save_cameras(const std::vector<Camera>& cams, const std::string& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& c : cams) j.push_back(camera_to_json(c));
  std::ofstream out(path);
  if (!out) throw format_error("save_cameras: cannot open " + path);
  out << j.dump(2) << "\n";
}

inline std::vector<Camera> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("load_cameras: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("load_cameras: " + std::string(e.what()));
  }
  std::vector<Camera> cams;
  for (const auto& cj : j) cams.push_back(camera_from_json(cj));
  return cams;
}

inline nlohmann::ordered_json transform_to_json(const AnisotropicTransform& t) {
  nlohmann::ordered_json j;
  j["rotation"] = mat3_to_json(t.rotation);
  j["translation"] = vec3_to_json(t.translation);
  j["scale"] = vec3_to_json(t.scale);
  j["frame"] = mat3_to_json(t.frame);
  return j;
}

inline AnisotropicTransform transform_from_json(const nlohmann::json& j) {
  AnisotropicTransform t;
  t.rotation = mat3_from_json(j.at("rotation"));
  t.translation = vec3_from_json(j.at("translation"));
  t.scale = vec3_from_json(j.at("scale"));
  t.frame = mat3_from_json(j.at("frame"));
  t.validate();
  return t;
}

}  // namespace splatalign
