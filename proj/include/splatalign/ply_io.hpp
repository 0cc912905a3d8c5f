// Binary little-endian PLY in the common splat interchange layout:
//   x y z, f_dc_0..2, f_rest_0..(3*((L+1)^2-1)-1), opacity, scale_0..2,
//   rot_0..3
// Opacity is stored as a logit and per-axis scales as natural logs; both
// live in linear form in memory.  f_rest is channel-major (all higher-band
// coefficients of channel 0, then 1, then 2), rot is (w, x, y, z).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "splatalign/types.hpp"

namespace splatalign {

inline void save_ply(const SplatCloud& cloud, const std::string& path) {
  cloud.validate();
  const int n_coeff = sh_coeff_count(cloud.sh_degree);
  const int n_rest = 3 * (n_coeff - 1);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error("save_ply: cannot open " + path);

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  const char* base[] = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (const char* name : base) out << "property float " << name << "\n";
  for (int i = 0; i < n_rest; ++i) out << "property float f_rest_" << i << "\n";
  out << "property float opacity\n";
  for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
  for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
  out << "end_header\n";

  std::vector<float> row(6 + n_rest + 1 + 3 + 4);
  for (const auto& p : cloud.primitives) {
    int k = 0;
    for (int i = 0; i < 3; ++i) row[k++] = static_cast<float>(p.mean[i]);
    for (int ch = 0; ch < 3; ++ch) row[k++] = static_cast<float>(p.sh(ch, 0));
    for (int ch = 0; ch < 3; ++ch)
      for (int c = 1; c < n_coeff; ++c) row[k++] = static_cast<float>(p.sh(ch, c));
    row[k++] = static_cast<float>(std::log(p.opacity / (1.0 - p.opacity)));
    for (int i = 0; i < 3; ++i) row[k++] = static_cast<float>(std::log(p.scale[i]));
    row[k++] = static_cast<float>(p.rotation.w());
    row[k++] = static_cast<float>(p.rotation.x());
    row[k++] = static_cast<float>(p.rotation.y());
    row[k++] = static_cast<float>(p.rotation.z());
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
  }
  if (!out) throw format_error("save_ply: write failure for " + path);
}

inline SplatCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("load_ply: cannot open " + path);

  std::string line;
  std::getline(in, line);
  if (line != "ply") throw format_error("load_ply: not a PLY file: " + path);

  std::size_t n_vertex = 0;
  std::vector<std::string> props;
  bool binary_le = false;
  bool in_vertex_element = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = (fmt == "binary_little_endian");
    } else if (tok == "element") {
      std::string name;
      ls >> name >> n_vertex;
      in_vertex_element = (name == "vertex");
      if (!in_vertex_element)
        throw format_error("load_ply: unsupported element '" + name + "' in " + path);
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (!in_vertex_element) continue;
      if (type != "float")
        throw format_error("load_ply: unsupported property type '" + type + "' in " + path);
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    } else if (tok == "comment" || tok == "obj_info" || tok.empty()) {
      continue;
    }
  }
  if (!binary_le)
    throw format_error("load_ply: only binary_little_endian is supported: " + path);

  auto find = [&](const std::string& name) {
    auto it = std::find(props.begin(), props.end(), name);
    if (it == props.end())
      throw format_error("load_ply: missing property '" + name + "' in " + path);
    return static_cast<int>(it - props.begin());
  };

  // Count trailing SH coefficients to infer the degree.
  int n_rest = 0;
  while (std::find(props.begin(), props.end(), "f_rest_" + std::to_string(n_rest)) !=
         props.end())
    ++n_rest;
  if (n_rest % 3 != 0)
    throw format_error("load_ply: f_rest count not divisible by 3 in " + path);
  const int n_coeff = n_rest / 3 + 1;
  int degree = -1;
  for (int d = 0; d <= 3; ++d)
    if (sh_coeff_count(d) == n_coeff) degree = d;
  if (degree < 0)
    throw format_error("load_ply: f_rest count does not match any degree <= 3 in " +
                       path);

  const int ix = find("x"), iy = find("y"), iz = find("z");
  const int idc[3] = {find("f_dc_0"), find("f_dc_1"), find("f_dc_2")};
  std::vector<int> irest(n_rest);
  for (int i = 0; i < n_rest; ++i) irest[i] = find("f_rest_" + std::to_string(i));
  const int iop = find("opacity");
  const int isc[3] = {find("scale_0"), find("scale_1"), find("scale_2")};
  const int irot[4] = {find("rot_0"), find("rot_1"), find("rot_2"), find("rot_3")};

  SplatCloud cloud;
  cloud.sh_degree = degree;
  cloud.primitives.resize(n_vertex);
  std::vector<float> row(props.size());
  for (std::size_t v = 0; v < n_vertex; ++v) {
    in.read(reinterpret_cast<char*>(row.data()),
            std::streamsize(row.size() * sizeof(float)));
    if (!in) throw format_error("load_ply: truncated vertex data in " + path);
    for (float f : row)
      if (!std::isfinite(f))
        throw format_error("load_ply: non-finite value at primitive " +
                           std::to_string(v) + " in " + path);

    auto& p = cloud.primitives[v];
    p.mean = Vec3(row[ix], row[iy], row[iz]);
    p.sh.resize(3, n_coeff);
    for (int ch = 0; ch < 3; ++ch) p.sh(ch, 0) = row[idc[ch]];
    for (int ch = 0; ch < 3; ++ch)
      for (int c = 1; c < n_coeff; ++c)
        p.sh(ch, c) = row[irest[ch * (n_coeff - 1) + (c - 1)]];
    p.opacity = 1.0 / (1.0 + std::exp(-double(row[iop])));
    p.scale = Vec3(std::exp(double(row[isc[0]])), std::exp(double(row[isc[1]])),
                   std::exp(double(row[isc[2]])));
    Quat q(row[irot[0]], row[irot[1]], row[irot[2]], row[irot[3]]);
    if (q.norm() < 1e-12)
      throw format_error("load_ply: zero quaternion at primitive " + std::to_string(v) +
                         " in " + path);
    p.rotation = q.normalized();
  }
  return cloud;
}

}  // namespace splatalign
