#pragma once

#include "sqc/geometry_grad.h"

namespace sqc {

// Beyond this many sharpness units of field value, sigmoid terms are below
// 1e-13 and a primitive's contribution is treated as exactly zero.
constexpr double kCullMargin = 30.0;

// Per-step precomputation for one dual-primitive.
struct PrimitiveFrame {
  QuadricFrame psq, nsq;
  double alpha = 0.5;
  double theta_c = 0.1;  // clamped sharpness used in every sigmoid
  double mu = 0.05;
  Vec3 color{0.5, 0.5, 0.5};
  double psq_reach = 0.0;  // world radius about psq center: outside => no density
  double nsq_reach = 0.0;  // world radius about nsq center: outside => no erase
};

PrimitiveFrame make_primitive_frame(const DualPrimitive& s, double mu);

// Per-(ray, primitive) context: local ray forms plus conservative t-gates.
struct PrimRayCtx {
  QuadricRay pray, nray;
  double ta = 1.0, tb = 0.0;  // density gate (empty when tb < ta)
  double na = 1.0, nb = 0.0;  // negative-quadric evaluation gate
};

// Returns false when the primitive cannot contribute anywhere on [t0, t1].
bool make_prim_ray_ctx(const PrimitiveFrame& pf, const Vec3& o, const Vec3& v, double t0,
                       double t1, PrimRayCtx* ctx);

// Merged field value at ray parameter t (value-only hot path). The negative
// quadric is skipped outside its gate, where its gate probability is < 1e-13.
inline double merged_f_at(const PrimitiveFrame& pf, const PrimRayCtx& ctx, double t) {
  const double fp = quadric_f_at(pf.psq, ctx.pray, t);
  if (t < ctx.na || t > ctx.nb) return fp;
  const double fn = quadric_f_at(pf.nsq, ctx.nray, t);
  const double pe = sigmoid(-fp / pf.theta_c - pf.mu) * sigmoid(-fn / pf.theta_c - pf.mu);
  return fp - pe * (fp + fn);
}

// Section density from boundary field values. Resolved orientation and
// scale: the printed ratio form (Phi(f_far) - Phi(f_near)) / Phi(f_far)
// zeroes entry crossings under the outside-positive sign convention, and as
// a [0,1] opacity it cannot saturate the Beer-Lambert compositing that
// consumes it. The NeuS reading this derives from treats the section as an
// opaque-density integral, so we return its average over the section:
//   sigma = max(ln Phi(f_near/th) - ln Phi(f_far/th), 0) / delta.
// Compositing 1 - exp(-sigma*delta) then reproduces the NeuS discrete
// opacity 1 - Phi(f_far/th)/Phi(f_near/th) exactly: entering the surface
// (f decreasing along the ray) yields sigma > 0, exiting clamps to 0, and a
// sharp full crossing renders opaque.
inline double density_from_pair(double f_near, double f_far, double theta_c, double delta) {
  const double od = softplus(-f_far / theta_c) - softplus(-f_near / theta_c);
  if (od <= 0.0) return 0.0;
  return od / delta;
}

// Adjoints of density_from_pair; valid when sigma > 0.
inline void density_backward(double f_near, double f_far, double theta_c, double delta,
                             double dsigma, double* df_near, double* df_far,
                             double* dtheta_c) {
  const double sn = sigmoid(-f_near / theta_c);
  const double sf = sigmoid(-f_far / theta_c);
  const double w = dsigma / (theta_c * delta);
  *df_near += w * sn;
  *df_far -= w * sf;
  *dtheta_c += w * (sf * f_far - sn * f_near) / theta_c;
}

// Reference (frame-free) section density for one dual-primitive, with
// delta_p = (delta_i / 2) * v. Matches the hot path within roundoff.
double primitive_density(const DualPrimitive& s, const Vec3& p, const Vec3& delta_p,
                         double mu);

// Renormalized merged unit normal at p = o + t*v (PSQ-direction fallback on
// blend cancellation, matching the reference merged evaluation).
Vec3 merged_normal_at(const PrimitiveFrame& pf, const PrimRayCtx& ctx, const Vec3& p,
                      double t);

}  // namespace sqc
