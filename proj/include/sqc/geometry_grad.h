#pragma once

#include "sqc/geometry.h"

namespace sqc {

// Precomputed evaluation frame for one superquadric. Built once per primitive
// per optimization step; all hot-loop evaluation goes through it.
struct QuadricFrame {
  Mat3 R;
  Mat3 dR[3];  // dR/d(euler_x), dR/d(euler_y), dR/d(euler_z)
  Vec3 T;
  Vec3 a;
  Vec3 inv_a;
  double e1 = 1.0, e2 = 1.0;
  double b1 = 2.0, b2 = 2.0;  // 2/e1, 2/e2
  double q = 1.0, h = 0.5;    // e2/e1, e1/2
  double a_max = 1.0;
};

QuadricFrame make_quadric_frame(const SuperquadricParams& p);

// Conservative world-space radius around T outside of which f >= level is
// guaranteed (uses f+1 >= |p-T| / (sqrt(3) * a_max)).
inline double quadric_reach(const QuadricFrame& fr, double level) {
  return 1.7320508075688772 * fr.a_max * (1.0 + level);
}

// Value-only evaluation from precomputed scaled-local ray coordinates:
// u(t) = u0 + t * uv. This is the training hot path.
struct QuadricRay {
  Vec3 u0, uv;
};

inline QuadricRay make_quadric_ray(const QuadricFrame& fr, const Vec3& o, const Vec3& v) {
  QuadricRay r;
  r.u0 = (fr.R.transpose() * (o - fr.T)).cwiseProduct(fr.inv_a);
  r.uv = (fr.R.transpose() * v).cwiseProduct(fr.inv_a);
  return r;
}

inline double quadric_f_from_u(const QuadricFrame& fr, const Vec3& u) {
  const double mx = std::abs(u.x()), my = std::abs(u.y()), mz = std::abs(u.z());
  const double A = abs_pow(mx, fr.b2) + abs_pow(my, fr.b2);
  const double B = (A > 0.0 ? abs_pow(A, fr.q) : 0.0) + abs_pow(mz, fr.b1);
  return (B > 0.0 ? abs_pow(B, fr.h) : 0.0) - 1.0;
}

inline double quadric_f_at(const QuadricFrame& fr, const QuadricRay& r, double t) {
  return quadric_f_from_u(fr, r.u0 + t * r.uv);
}

inline double quadric_f(const QuadricFrame& fr, const Vec3& p) {
  return quadric_f_from_u(fr, (fr.R.transpose() * (p - fr.T)).cwiseProduct(fr.inv_a));
}

// Full evaluation with recorded intermediates for the adjoint pass.
struct QuadricCache {
  Vec3 d;       // p - T
  Vec3 pl;      // R^T d
  Vec3 u, s;    // scaled local coords and their signs
  double mx, my, mz;
  double lnmx, lnmy, lnmz;  // 0 when the coordinate is 0
  double Px, Py, Pz;        // m^(b-1)
  double tx, ty, tz;
  double A, Aq1, lnA, W;
  double B, Bh1, lnB, fp1;
  double f;
  // gradient-path intermediates (valid when has_grad)
  bool has_grad = false;
  double gB, gA, dux, duy, duz;
  Vec3 grad_local;
  Vec3 grad_world;
};

double quadric_eval(const QuadricFrame& fr, const Vec3& p, bool want_grad, QuadricCache* c);

// Constrained-space parameter adjoints for one quadric.
struct QuadricAdjoint {
  Vec3 scale = Vec3::Zero();
  Vec2 shape = Vec2::Zero();
  Vec3 trans = Vec3::Zero();
  Vec3 rot = Vec3::Zero();
};

// Accumulates d(objective)/d(params) given the adjoint of the value (f_bar)
// and, optionally, of the world-space spatial gradient (g_bar). The zero
// conventions mirror the forward pass exactly.
void quadric_backward(const QuadricFrame& fr, const QuadricCache& c, double f_bar,
                      const Vec3* g_bar, QuadricAdjoint* adj);

}  // namespace sqc
