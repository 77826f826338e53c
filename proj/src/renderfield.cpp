#include "sqc/renderfield.h"

#include "sqc/geometry.h"

namespace sqc {

PrimitiveFrame make_primitive_frame(const DualPrimitive& s, double mu) {
  PrimitiveFrame pf;
  pf.psq = make_quadric_frame(s.psq);
  pf.nsq = make_quadric_frame(s.nsq);
  pf.alpha = s.alpha;
  pf.theta_c = s.theta_eval();
  pf.mu = mu;
  pf.color = s.basic_color;
  pf.psq_reach = quadric_reach(pf.psq, kCullMargin * pf.theta_c);
  pf.nsq_reach = quadric_reach(pf.nsq, kCullMargin * pf.theta_c);
  return pf;
}

namespace {

// Intersection of the ray with a sphere, clipped to [t0, t1]; false on miss.
bool sphere_gate(const Vec3& o, const Vec3& v, const Vec3& c, double radius, double t0,
                 double t1, double* ga, double* gb) {
  const Vec3 oc = o - c;
  const double b = oc.dot(v);
  const double disc = b * b - (oc.squaredNorm() - radius * radius);
  if (disc <= 0.0) return false;
  const double s = std::sqrt(disc);
  *ga = std::max(-b - s, t0);
  *gb = std::min(-b + s, t1);
  return *ga <= *gb;
}

}  // namespace

bool make_prim_ray_ctx(const PrimitiveFrame& pf, const Vec3& o, const Vec3& v, double t0,
                       double t1, PrimRayCtx* ctx) {
  if (!sphere_gate(o, v, pf.psq.T, pf.psq_reach, t0, t1, &ctx->ta, &ctx->tb)) return false;
  ctx->pray = make_quadric_ray(pf.psq, o, v);
  if (sphere_gate(o, v, pf.nsq.T, pf.nsq_reach, t0, t1, &ctx->na, &ctx->nb)) {
    ctx->nray = make_quadric_ray(pf.nsq, o, v);
  } else {
    ctx->na = 1.0;
    ctx->nb = 0.0;
  }
  return true;
}

double primitive_density(const DualPrimitive& s, const Vec3& p, const Vec3& delta_p,
                         double mu) {
  const double theta = s.theta_eval();
  const double f_near = merged_isf(p - delta_p, s, mu).value;
  const double f_far = merged_isf(p + delta_p, s, mu).value;
  return density_from_pair(f_near, f_far, theta, 2.0 * delta_p.norm());
}

}  // namespace sqc
