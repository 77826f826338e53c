#pragma once

#include <vector>

#include "sqc/mathutil.h"
#include "sqc/rng.h"

namespace sqc {

// Scene content is optimized inside [-1,1]^3; rays are clipped against a
// slightly padded box so surfaces on the boundary still get samples.
constexpr double kSceneBound = 1.1;

// Pinhole camera. Camera space is right-handed: x right, y up, looking along
// -z. Pixel (col,row) indexes from the top-left corner, rows grow downward,
// and rays pass through pixel centers (+0.5 offsets).
struct Camera {
  int width = 0, height = 0;
  double fx = 1, fy = 1, cx = 0, cy = 0;
  Mat3 R = Mat3::Identity();  // world-to-camera rotation
  Vec3 t = Vec3::Zero();      // x_cam = R * x_world + t

  Vec3 center() const { return -R.transpose() * t; }

  void pixel_ray(int col, int row, Vec3* origin, Vec3* dir) const {
    const Vec3 d_cam((col + 0.5 - cx) / fx, -(row + 0.5 - cy) / fy, -1.0);
    *origin = center();
    *dir = (R.transpose() * d_cam).normalized();
  }

  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int w, int h,
                        double fov_deg);
};

// Samples along one pixel ray, clipped to the scene box.
struct RaySamples {
  Vec3 o = Vec3::Zero();
  Vec3 v = Vec3::UnitZ();
  std::vector<double> t;      // ascending; empty when the ray misses the box
  std::vector<double> delta;  // delta[i] = t[i+1]-t[i]; last repeats previous
};

// Slab intersection with [-b, b]^3. Returns false on miss; t0 clamped >= 0.
bool intersect_scene_box(const Vec3& o, const Vec3& v, double bound, double* t0, double* t1);

// n stratified samples in the box range: jittered when rng != nullptr,
// stratum midpoints otherwise.
RaySamples make_ray_samples(const Camera& cam, int col, int row, int n, Rng* rng);

}  // namespace sqc
