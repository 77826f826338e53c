#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "sqc/meshops.h"

namespace sqc {

MeshMetrics mesh_metrics(const TriMesh& m) {
  MeshMetrics out;
  out.v = int(m.vertices.size());
  out.f = int(m.faces.size());
  std::unordered_map<uint64_t, int> edges;
  edges.reserve(m.faces.size() * 3);
  for (const auto& f : m.faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[e], b = f[(e + 1) % 3];
      const uint64_t key = (uint64_t(uint32_t(std::min(a, b))) << 32) | uint32_t(std::max(a, b));
      ++edges[key];
    }
    const auto& v0 = m.vertices[size_t(f[0])];
    const auto& v1 = m.vertices[size_t(f[1])];
    const auto& v2 = m.vertices[size_t(f[2])];
    out.volume += v0.dot(v1.cross(v2)) / 6.0;
  }
  out.e = int(edges.size());
  out.euler = out.v - out.e + out.f;
  out.watertight = out.f > 0;
  for (const auto& [key, count] : edges) {
    if (count != 2) {
      out.watertight = false;
      break;
    }
  }
  return out;
}

void write_obj(const TriMesh& m, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_obj: cannot open '" + path + "'");
  char buf[96];
  for (const Vec3& v : m.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    os << buf;
  }
  const bool tagged = m.face_prim.size() == m.faces.size() && !m.faces.empty();
  int current = -2;
  for (size_t i = 0; i < m.faces.size(); ++i) {
    if (tagged && m.face_prim[i] != current) {
      current = m.face_prim[i];
      os << "o primitive_" << current << "\n";
    }
    os << "f " << m.faces[i][0] + 1 << " " << m.faces[i][1] + 1 << " " << m.faces[i][2] + 1
       << "\n";
  }
  if (!os) throw std::runtime_error("write_obj: write failed for '" + path + "'");
}

TriMesh read_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_obj: cannot open '" + path + "'");
  TriMesh m;
  int group = -1;
  int group_ordinal = -1;
  bool any_group = false;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw std::runtime_error("read_obj: malformed vertex line '" + line + "'");
      }
      m.vertices.push_back(v);
    } else if (head == "o" || head == "g") {
      any_group = true;
      ++group_ordinal;
      std::string name;
      ls >> name;
      int id = 0;
      if (std::sscanf(name.c_str(), "primitive_%d", &id) == 1) {
        group = id;
      } else {
        group = group_ordinal;
      }
    } else if (head == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/j", "i//k", "i/j/k" all reduce to the leading index.
        const long raw = std::strtol(tok.c_str(), nullptr, 10);
        if (raw <= 0 || raw > long(m.vertices.size())) {
          throw std::runtime_error("read_obj: face index out of range in '" + line + "'");
        }
        idx.push_back(int(raw) - 1);
      }
      if (idx.size() < 3) {
        throw std::runtime_error("read_obj: face with fewer than 3 vertices in '" + line + "'");
      }
      for (size_t i = 1; i + 1 < idx.size(); ++i) {
        m.faces.push_back({idx[0], idx[i], idx[i + 1]});
        m.face_prim.push_back(group);
      }
    }
  }
  if (!any_group) m.face_prim.clear();
  return m;
}

ExportStats export_scene(const std::vector<DualPrimitive>& prims, double threshold, int res,
                         const std::string& path) {
  ExportStats stats;
  TriMesh combined;
  for (size_t k = 0; k < prims.size(); ++k) {
    const DualPrimitive& prim = prims[k];
    if (prim.alpha < threshold) continue;

    TriMesh piece = tessellate_superquadric(prim.psq, res, res);
    Vec3 plo, phi, nlo, nhi;
    superquadric_aabb(prim.psq, &plo, &phi);
    superquadric_aabb(prim.nsq, &nlo, &nhi);
    const bool overlap = (phi.array() >= nlo.array()).all() && (nhi.array() >= plo.array()).all();
    if (overlap) {
      try {
        piece = boolean_difference(piece, tessellate_superquadric(prim.nsq, res, res));
      } catch (const std::exception&) {
        stats.boolean_warnings.push_back(int(k));
      }
    }

    piece.face_prim.assign(piece.faces.size(), int(k));
    const int base = int(combined.vertices.size());
    combined.vertices.insert(combined.vertices.end(), piece.vertices.begin(),
                             piece.vertices.end());
    for (const auto& f : piece.faces) {
      combined.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    }
    combined.face_prim.insert(combined.face_prim.end(), piece.face_prim.begin(),
                              piece.face_prim.end());

    ++stats.num_primitives;
    stats.per_primitive.push_back(
        {int(k), int(piece.vertices.size()), int(piece.faces.size())});
  }
  stats.vertices = int(combined.vertices.size());
  stats.faces = int(combined.faces.size());
  write_obj(combined, path);

  nlohmann::ordered_json j;
  j["num_primitives"] = stats.num_primitives;
  j["V"] = stats.vertices;
  j["F"] = stats.faces;
  j["per_primitive"] = nlohmann::ordered_json::array();
  for (const auto& p : stats.per_primitive) {
    j["per_primitive"].push_back({{"id", p[0]}, {"vertices", p[1]}, {"faces", p[2]}});
  }
  std::ofstream os(path + ".stats.json", std::ios::trunc);
  if (!os) throw std::runtime_error("export_scene: cannot open '" + path + ".stats.json'");
  os << j.dump(1) << "\n";
  return stats;
}

}  // namespace sqc
