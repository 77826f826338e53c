#include "sqc/camera.h"

namespace sqc {

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int w, int h,
                       double fov_deg) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = (w / 2.0) / std::tan(deg2rad(fov_deg) / 2.0);
  cam.cx = w / 2.0;
  cam.cy = h / 2.0;

  const Vec3 fwd = (target - eye).normalized();
  Vec3 right = fwd.cross(up);
  if (right.norm() < 1e-9) right = fwd.cross(Vec3(0, 1, 0));
  if (right.norm() < 1e-9) right = fwd.cross(Vec3(1, 0, 0));
  right.normalize();
  const Vec3 true_up = right.cross(fwd);

  Mat3 c2w;
  c2w.col(0) = right;
  c2w.col(1) = true_up;
  c2w.col(2) = -fwd;
  cam.R = c2w.transpose();
  cam.t = -cam.R * eye;
  return cam;
}

bool intersect_scene_box(const Vec3& o, const Vec3& v, double bound, double* t0, double* t1) {
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (v[i] == 0.0) {
      if (std::abs(o[i]) > bound) return false;
      continue;
    }
    double a = (-bound - o[i]) / v[i];
    double b = (bound - o[i]) / v[i];
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  }
  if (lo >= hi) return false;
  *t0 = lo;
  *t1 = hi;
  return true;
}

RaySamples make_ray_samples(const Camera& cam, int col, int row, int n, Rng* rng) {
  RaySamples rs;
  cam.pixel_ray(col, row, &rs.o, &rs.v);
  double t0, t1;
  if (!intersect_scene_box(rs.o, rs.v, kSceneBound, &t0, &t1)) return rs;

  const double span = (t1 - t0) / n;
  rs.t.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng != nullptr ? rng->uniform01() : 0.5;
    rs.t[i] = t0 + (i + u) * span;
  }
  rs.delta.resize(n);
  for (int i = 0; i + 1 < n; ++i) rs.delta[i] = rs.t[i + 1] - rs.t[i];
  rs.delta[n - 1] = n >= 2 ? rs.delta[n - 2] : span;
  return rs;
}

}  // namespace sqc
