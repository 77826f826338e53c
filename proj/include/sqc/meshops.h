#pragma once

#include <array>
#include <string>
#include <vector>

#include "sqc/geometry.h"

namespace sqc {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<int> face_prim;  // per-face primitive id; empty when untagged

  bool empty() const { return faces.empty(); }
};

struct MeshMetrics {
  int v = 0, e = 0, f = 0;
  int euler = 0;         // V - E + F
  double volume = 0.0;   // signed, by divergence theorem
  bool watertight = false;  // every undirected edge shared by exactly 2 faces
};

MeshMetrics mesh_metrics(const TriMesh& m);

// Parametric tessellation: latitude bands eta in [-pi/2, pi/2] with the pole
// rings collapsed to single vertices, longitude omega wrapping. Every vertex
// lies on the implicit surface; rings of constant eta are regular edge loops.
TriMesh tessellate_superquadric(const SuperquadricParams& q, int res_u, int res_v);

// Watertight regularized A \ B via BSP clipping (coplanarity tolerance 1e-9)
// followed by crack repair at split boundaries. Disjoint bounding boxes
// short-circuit to A. Faces retain A's tags; faces cut from B keep B's.
// Throws std::runtime_error when an input is not watertight.
TriMesh boolean_difference(const TriMesh& a, const TriMesh& b);

// World-space axis-aligned bounds: the superquadric is inscribed in its
// scaled local box for every shape exponent.
void superquadric_aabb(const SuperquadricParams& q, Vec3* lo, Vec3* hi);

struct ExportStats {
  int num_primitives = 0;
  int vertices = 0;
  int faces = 0;
  std::vector<std::array<int, 3>> per_primitive;  // {id, vertices, faces}
  std::vector<int> boolean_warnings;  // primitive ids exported without carving
};

// One OBJ with a named `o primitive_<k>` group per primitive with
// alpha >= threshold: tessellated positive quadric minus its negative
// quadric (skipped when their bounds are disjoint; on boolean failure the
// positive shape alone is written and the id recorded). An adjacent
// `<path>.stats.json` holds {num_primitives, V, F, per_primitive}.
ExportStats export_scene(const std::vector<DualPrimitive>& prims, double threshold, int res,
                         const std::string& path);

void write_obj(const TriMesh& m, const std::string& path);
TriMesh read_obj(const std::string& path);

}  // namespace sqc
