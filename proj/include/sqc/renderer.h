#pragma once

#include "sqc/camera.h"
#include "sqc/lighting.h"
#include "sqc/renderfield.h"

namespace sqc {

struct RenderOptions {
  int n_samples = 128;
  double mu = 0.05;
  bool jitter = false;      // stratified jitter (training); midpoints otherwise
  uint64_t seed = 0;        // jitter stream key
  uint64_t iteration = 0;   // jitter stream key
  bool normals = true;      // fill the normal buffer
};

struct RenderBuffers {
  int width = 0, height = 0;
  std::vector<Vec3> rgb;     // linear, unclamped (clamped only at PNG write)
  std::vector<double> mask;  // accumulated compositing weight, in [0,1]
  std::vector<Vec3> normal;  // blend-weighted merged normals
  std::vector<double> depth; // weight-averaged sample depth
  std::vector<double> prim_max_weight;  // per primitive, max blend weight seen

  int idx(int col, int row) const { return row * width + col; }
};

// Density and blend weights at one point; weights are zeroed when the total
// is at or below 1e-12. delta_p is the half-spacing step along the ray.
double point_density(const std::vector<DualPrimitive>& prims, const Vec3& p,
                     const Vec3& delta_p, double mu, std::vector<double>* weights);

// Blend of basic colors plus the shared lighting residual; (0,0,0) when all
// weights vanish (background). net may be null (no residual).
Vec3 point_color(const std::vector<DualPrimitive>& prims, const std::vector<double>& weights,
                 const Vec3& p, const LightingNet* net);

struct CompositeOut {
  Vec3 rgb = Vec3::Zero();
  double mask = 0.0;
  Vec3 normal = Vec3::Zero();
  double depth = 0.0;
};

// Front-to-back volume accumulation over one ray.
CompositeOut composite(const std::vector<double>& t, const std::vector<double>& delta,
                       const std::vector<double>& sigma, const std::vector<Vec3>& color,
                       const std::vector<Vec3>& normal);

RenderBuffers render_image(const std::vector<DualPrimitive>& prims, const LightingNet* net,
                           const Camera& cam, const RenderOptions& opt);

}  // namespace sqc
