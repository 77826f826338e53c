#pragma once

#include <string>
#include <vector>

#include "sqc/image.h"
#include "sqc/meshops.h"

namespace sqc {

struct EvalReport {
  double chamfer_x1e3 = 0.0;
  int num_vertices = 0;
  int num_faces = 0;
  double nc_loss_x1e3 = 0.0;
  std::vector<double> silhouette_iou;
  double runtime_seconds = 0.0;
};

std::string eval_report_to_json(const EvalReport& r);

void mesh_bbox(const TriMesh& m, Vec3* lo, Vec3* hi);

// Maps vertices so the given box is centered at the origin with its longest
// side scaled to 1. Both meshes of a comparison get the ground truth's box.
void normalize_by_bbox(TriMesh* m, const Vec3& lo, const Vec3& hi);

// Area-weighted uniform surface samples, deterministic in the seed.
// Throws std::runtime_error on a mesh with no area.
std::vector<Vec3> sample_mesh_surface(const TriMesh& m, int n, uint64_t seed);

// Exact nearest-neighbor distance from each query into `points`; kd-tree
// accelerated but bit-identical to brute force.
std::vector<double> nearest_distances(const std::vector<Vec3>& queries,
                                      const std::vector<Vec3>& points);

// Symmetric mean nearest-neighbor distance between n_samples area-weighted
// surface points per mesh, scaled by 1e3. Inputs are expected already
// normalized by the ground-truth box.
double chamfer(const TriMesh& a, const TriMesh& b, int n_samples, uint64_t seed);

// Mean L1 difference of decoded normal maps over mask-positive pixels across
// all views, scaled by 1e3. No masked pixels anywhere: returns 0 and sets
// *warned_empty.
double nc_loss(const std::vector<ImageU8>& pred, const std::vector<ImageU8>& ref,
               const std::vector<ImageU8>& masks, bool* warned_empty);

// Intersection over union of masks binarized at 0.5; two empty masks are 1.
double silhouette_iou(const ImageU8& pred, const ImageU8& gt);

}  // namespace sqc
