#pragma once

#include <functional>

#include "sqc/geometry.h"
#include "sqc/rng.h"

namespace sqc::test {

inline SuperquadricParams random_superquadric(Rng& rng, double shape_lo = 0.1,
                                              double shape_hi = 2.0) {
  SuperquadricParams q;
  q.scale = Vec3(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0));
  q.shape = Vec2(rng.uniform(shape_lo, shape_hi), rng.uniform(shape_lo, shape_hi));
  q.translation =
      Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  q.rotation = Vec3(rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi));
  return q;
}

// World point whose local scaled coordinates stay away from the fractional
// power singularities (no component near 0).
inline Vec3 random_nonsingular_point(Rng& rng, const SuperquadricParams& q) {
  Vec3 u;
  for (int i = 0; i < 3; ++i) {
    const double mag = rng.uniform(0.15, 1.4);
    u[i] = rng.uniform01() < 0.5 ? -mag : mag;
  }
  return rotation_matrix(q.rotation) * u.cwiseProduct(q.scale) + q.translation;
}

// Central finite difference of a scalar function of one packed coordinate.
inline double central_diff(const std::function<double(double)>& g, double x, double h) {
  return (g(x + h) - g(x - h)) / (2.0 * h);
}

inline Vec3 fd_spatial_gradient(const Vec3& p, const SuperquadricParams& q, double h) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 hi = p, lo = p;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (isf_superquadric(hi, q) - isf_superquadric(lo, q)) / (2.0 * h);
  }
  return g;
}

}  // namespace sqc::test
