#pragma once

#include <string>
#include <vector>

#include "sqc/camera.h"
#include "sqc/geometry.h"

namespace sqc {

// Built-in ground-truth scenes: "ellipsoid" (plain positive quadric, inert
// carver parked outside) and "box_with_hole" (one carving pair whose negative
// quadric tunnels through the box). Throws on unknown names.
std::vector<DualPrimitive> synth_preset(const std::string& name);

// n_views - 2 Fibonacci-lattice viewpoints on the sphere plus explicit top
// and bottom views (lattice poles on the y axis), all looking at the origin
// from a fixed distance. The seed rotates the lattice azimuth.
std::vector<Camera> synth_cameras(int n_views, int resolution, uint64_t seed);

// Renders the shape with this repository's renderer at opaque settings
// (alpha forced to 1, sharp theta) and writes a loadable dataset layout:
// cameras.json, images/, masks/, normals/ (camera-space, 0.5*(n+1) encoded),
// plus gt_mesh.obj and gt_primitives.json for evaluation.
void synth_dataset(std::vector<DualPrimitive> shape, const std::string& name, int n_views,
                   int resolution, uint64_t seed, const std::string& out_dir);

}  // namespace sqc
