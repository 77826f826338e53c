#include <stdexcept>

#include "sqc/meshops.h"

namespace sqc {

namespace {

// Signed power used by the parametric surface map: sgn(c) * |c|^e.
double spow(double c, double e) {
  if (c == 0.0) return 0.0;
  const double m = std::pow(std::abs(c), e);
  return c < 0.0 ? -m : m;
}

}  // namespace

TriMesh tessellate_superquadric(const SuperquadricParams& q, int res_u, int res_v) {
  if (res_u < 3 || res_v < 3) {
    throw std::runtime_error("tessellate_superquadric: resolution must be >= 3");
  }
  const Mat3 R = rotation_matrix(q.rotation);
  const double e1 = q.shape[0], e2 = q.shape[1];

  TriMesh m;
  const auto emit = [&](double eta, double omega) {
    const double ce = std::cos(eta), se = std::sin(eta);
    const double co = std::cos(omega), so = std::sin(omega);
    const Vec3 local(q.scale.x() * spow(ce, e1) * spow(co, e2),
                     q.scale.y() * spow(ce, e1) * spow(so, e2),
                     q.scale.z() * spow(se, e1));
    m.vertices.push_back(R * local + q.translation);
    return int(m.vertices.size()) - 1;
  };

  const int bottom = emit(-kPi / 2.0, 0.0);
  const int top = emit(kPi / 2.0, 0.0);
  // Interior rings: eta rows 1..res_u-1, omega columns wrapping at res_v.
  std::vector<int> ring(size_t(res_u - 1) * res_v);
  for (int i = 1; i < res_u; ++i) {
    const double eta = -kPi / 2.0 + kPi * i / res_u;
    for (int j = 0; j < res_v; ++j) {
      const double omega = -kPi + 2.0 * kPi * j / res_v;
      ring[size_t(i - 1) * res_v + j] = emit(eta, omega);
    }
  }

  const auto at = [&](int i, int j) { return ring[size_t(i - 1) * res_v + (j % res_v)]; };
  for (int j = 0; j < res_v; ++j) {  // bottom fan (outward: descending eta first)
    m.faces.push_back({bottom, at(1, j + 1), at(1, j)});
  }
  for (int i = 1; i + 1 < res_u; ++i) {
    for (int j = 0; j < res_v; ++j) {
      const int a = at(i, j), b = at(i, j + 1), c = at(i + 1, j + 1), d = at(i + 1, j);
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
  for (int j = 0; j < res_v; ++j) {  // top fan
    m.faces.push_back({top, at(res_u - 1, j), at(res_u - 1, j + 1)});
  }
  return m;
}

void superquadric_aabb(const SuperquadricParams& q, Vec3* lo, Vec3* hi) {
  const Mat3 R = rotation_matrix(q.rotation);
  const Vec3 half = R.cwiseAbs() * q.scale;
  *lo = q.translation - half;
  *hi = q.translation + half;
}

}  // namespace sqc
