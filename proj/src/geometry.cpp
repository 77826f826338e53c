#include "sqc/geometry.h"

namespace sqc {

Mat3 rotation_matrix(const Vec3& e) {
  const double cx = std::cos(e.x()), sx = std::sin(e.x());
  const double cy = std::cos(e.y()), sy = std::sin(e.y());
  const double cz = std::cos(e.z()), sz = std::sin(e.z());
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  return rz * ry * rx;
}

Vec3 to_local_frame(const Vec3& p, const SuperquadricParams& q) {
  return rotation_matrix(q.rotation).transpose() * (p - q.translation);
}

namespace {

struct LocalEval {
  double f;
  Vec3 grad_local;  // d f / d p'
};

LocalEval eval_local(const Vec3& pl, const SuperquadricParams& q, bool want_grad) {
  const double e1 = q.shape.x(), e2 = q.shape.y();
  const double b1 = 2.0 / e1, b2 = 2.0 / e2;
  const double qe = e2 / e1, h = e1 / 2.0;

  const Vec3 u = pl.cwiseQuotient(q.scale);
  const double mx = std::abs(u.x()), my = std::abs(u.y()), mz = std::abs(u.z());
  const double tx = abs_pow(mx, b2), ty = abs_pow(my, b2), tz = abs_pow(mz, b1);
  const double A = tx + ty;
  const double W = A > 0.0 ? abs_pow(A, qe) : 0.0;
  const double B = W + tz;
  const double fp1 = B > 0.0 ? abs_pow(B, h) : 0.0;

  LocalEval out;
  out.f = fp1 - 1.0;
  out.grad_local.setZero();
  if (!want_grad || B <= 0.0) return out;

  // d f / d u, with the base-0 convention for fractional powers.
  const double gB = h * abs_pow(B, h - 1.0);
  const double gA = A > 0.0 ? gB * qe * abs_pow(A, qe - 1.0) : 0.0;
  const double dux = mx > 0.0 ? gA * b2 * abs_pow(mx, b2 - 1.0) * sgn(u.x()) : 0.0;
  const double duy = my > 0.0 ? gA * b2 * abs_pow(my, b2 - 1.0) * sgn(u.y()) : 0.0;
  const double duz = mz > 0.0 ? gB * b1 * abs_pow(mz, b1 - 1.0) * sgn(u.z()) : 0.0;
  out.grad_local = Vec3(dux / q.scale.x(), duy / q.scale.y(), duz / q.scale.z());
  return out;
}

}  // namespace

double isf_superquadric(const Vec3& p, const SuperquadricParams& q) {
  return eval_local(to_local_frame(p, q), q, false).f;
}

Vec3 isf_gradient(const Vec3& p, const SuperquadricParams& q) {
  const Mat3 r = rotation_matrix(q.rotation);
  const Vec3 pl = r.transpose() * (p - q.translation);
  return r * eval_local(pl, q, true).grad_local;
}

double erase_probability(double f_psq, double f_nsq, double theta, double mu) {
  return sigmoid(-f_psq / theta - mu) * sigmoid(-f_nsq / theta - mu);
}

IsfSample merged_isf(const Vec3& p, const DualPrimitive& s, double mu) {
  const double theta = s.theta_eval();
  const Mat3 rp = rotation_matrix(s.psq.rotation);
  const Mat3 rn = rotation_matrix(s.nsq.rotation);
  const LocalEval ep = eval_local(rp.transpose() * (p - s.psq.translation), s.psq, true);
  const LocalEval en = eval_local(rn.transpose() * (p - s.nsq.translation), s.nsq, true);

  IsfSample out;
  out.per_quadric = Vec2(ep.f, en.f);
  const double pe = erase_probability(ep.f, en.f, theta, mu);
  out.erase_prob = pe;
  out.value = ep.f * (1.0 - pe) - en.f * pe;

  const Vec3 gp = rp * ep.grad_local;
  const Vec3 gn = rn * en.grad_local;
  const double np = gp.norm(), nn = gn.norm();
  const Vec3 dp = np > 0.0 ? Vec3(gp / np) : Vec3(0, 0, 0);
  const Vec3 dn = nn > 0.0 ? Vec3(gn / nn) : Vec3(0, 0, 0);
  Vec3 blend = dp * (1.0 - pe) - dn * pe;
  const double bl = blend.norm();
  if (bl < 1e-12) {
    out.normal = np > 0.0 ? dp : Vec3(0, 0, 1);
  } else {
    out.normal = blend / bl;
  }
  return out;
}

}  // namespace sqc
