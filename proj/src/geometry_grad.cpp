#include "sqc/geometry_grad.h"

namespace sqc {

QuadricFrame make_quadric_frame(const SuperquadricParams& p) {
  QuadricFrame fr;
  const double cx = std::cos(p.rotation.x()), sx = std::sin(p.rotation.x());
  const double cy = std::cos(p.rotation.y()), sy = std::sin(p.rotation.y());
  const double cz = std::cos(p.rotation.z()), sz = std::sin(p.rotation.z());
  Mat3 Rx, Ry, Rz, dRx, dRy, dRz;
  Rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  Ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  Rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  dRx << 0, 0, 0, 0, -sx, -cx, 0, cx, -sx;
  dRy << -sy, 0, cy, 0, 0, 0, -cy, 0, -sy;
  dRz << -sz, -cz, 0, cz, -sz, 0, 0, 0, 0;
  fr.R = Rz * Ry * Rx;
  fr.dR[0] = Rz * Ry * dRx;
  fr.dR[1] = Rz * dRy * Rx;
  fr.dR[2] = dRz * Ry * Rx;
  fr.T = p.translation;
  fr.a = p.scale;
  fr.inv_a = p.scale.cwiseInverse();
  fr.e1 = p.shape.x();
  fr.e2 = p.shape.y();
  fr.b1 = 2.0 / fr.e1;
  fr.b2 = 2.0 / fr.e2;
  fr.q = fr.e2 / fr.e1;
  fr.h = fr.e1 / 2.0;
  fr.a_max = p.scale.maxCoeff();
  return fr;
}

double quadric_eval(const QuadricFrame& fr, const Vec3& p, bool want_grad, QuadricCache* c) {
  c->d = p - fr.T;
  c->pl = fr.R.transpose() * c->d;
  c->u = c->pl.cwiseProduct(fr.inv_a);
  c->s = Vec3(sgn(c->u.x()), sgn(c->u.y()), sgn(c->u.z()));
  c->mx = std::abs(c->u.x());
  c->my = std::abs(c->u.y());
  c->mz = std::abs(c->u.z());
  c->lnmx = c->mx > 0.0 ? std::log(c->mx) : 0.0;
  c->lnmy = c->my > 0.0 ? std::log(c->my) : 0.0;
  c->lnmz = c->mz > 0.0 ? std::log(c->mz) : 0.0;
  c->Px = abs_pow(c->mx, fr.b2 - 1.0);
  c->Py = abs_pow(c->my, fr.b2 - 1.0);
  c->Pz = abs_pow(c->mz, fr.b1 - 1.0);
  c->tx = c->Px * c->mx;
  c->ty = c->Py * c->my;
  c->tz = c->Pz * c->mz;
  c->A = c->tx + c->ty;
  if (c->A > 0.0) {
    c->lnA = std::log(c->A);
    c->Aq1 = abs_pow(c->A, fr.q - 1.0);
  } else {
    c->lnA = 0.0;
    c->Aq1 = 0.0;
  }
  c->W = c->Aq1 * c->A;
  c->B = c->W + c->tz;
  if (c->B > 0.0) {
    c->lnB = std::log(c->B);
    c->Bh1 = abs_pow(c->B, fr.h - 1.0);
  } else {
    c->lnB = 0.0;
    c->Bh1 = 0.0;
  }
  c->fp1 = c->Bh1 * c->B;
  c->f = c->fp1 - 1.0;
  c->has_grad = want_grad;
  if (want_grad) {
    c->gB = fr.h * c->Bh1;
    c->gA = c->gB * fr.q * c->Aq1;
    c->dux = c->gA * fr.b2 * c->Px * c->s.x();
    c->duy = c->gA * fr.b2 * c->Py * c->s.y();
    c->duz = c->gB * fr.b1 * c->Pz * c->s.z();
    c->grad_local =
        Vec3(c->dux * fr.inv_a.x(), c->duy * fr.inv_a.y(), c->duz * fr.inv_a.z());
    c->grad_world = fr.R * c->grad_local;
  }
  return c->f;
}

void quadric_backward(const QuadricFrame& fr, const QuadricCache& c, double f_bar,
                      const Vec3* g_bar, QuadricAdjoint* adj) {
  double fp1_bar = f_bar;
  double b1_bar = 0.0, b2_bar = 0.0, q_bar = 0.0, h_bar = 0.0;
  double Px_bar = 0.0, Py_bar = 0.0, Pz_bar = 0.0;
  double A_bar = 0.0, Aq1_bar = 0.0, B_bar = 0.0, Bh1_bar = 0.0, W_bar = 0.0;
  Vec3 pl_bar = Vec3::Zero();
  Vec3 ia_bar = Vec3::Zero();
  Mat3 R_bar = Mat3::Zero();

  if (g_bar != nullptr && c.has_grad) {
    const Vec3& G = *g_bar;
    // grad_world = R * grad_local
    Vec3 gl_bar = fr.R.transpose() * G;
    R_bar += G * c.grad_local.transpose();
    // grad_local components: du* * inv_a
    const double dux_bar = gl_bar.x() * fr.inv_a.x();
    const double duy_bar = gl_bar.y() * fr.inv_a.y();
    const double duz_bar = gl_bar.z() * fr.inv_a.z();
    ia_bar.x() += gl_bar.x() * c.dux;
    ia_bar.y() += gl_bar.y() * c.duy;
    ia_bar.z() += gl_bar.z() * c.duz;
    // dux = gA * b2 * Px * sx  (sign is constant a.e.)
    double gA_bar = dux_bar * fr.b2 * c.Px * c.s.x() + duy_bar * fr.b2 * c.Py * c.s.y();
    double gB_bar = duz_bar * fr.b1 * c.Pz * c.s.z();
    b2_bar += dux_bar * c.gA * c.Px * c.s.x() + duy_bar * c.gA * c.Py * c.s.y();
    b1_bar += duz_bar * c.gB * c.Pz * c.s.z();
    Px_bar += dux_bar * c.gA * fr.b2 * c.s.x();
    Py_bar += duy_bar * c.gA * fr.b2 * c.s.y();
    Pz_bar += duz_bar * c.gB * fr.b1 * c.s.z();
    // gA = gB * q * Aq1
    gB_bar += gA_bar * fr.q * c.Aq1;
    q_bar += gA_bar * c.gB * c.Aq1;
    Aq1_bar += gA_bar * c.gB * fr.q;
    // gB = h * Bh1
    h_bar += gB_bar * c.Bh1;
    Bh1_bar += gB_bar * fr.h;
  }

  // fp1 = Bh1 * B
  Bh1_bar += fp1_bar * c.B;
  B_bar += fp1_bar * c.Bh1;
  // Bh1 = exp((h-1) ln B), zero branch contributes nothing
  if (c.B > 0.0) {
    B_bar += Bh1_bar * (fr.h - 1.0) * c.Bh1 / c.B;
    h_bar += Bh1_bar * c.Bh1 * c.lnB;
  }
  // B = W + tz
  W_bar += B_bar;
  double tz_bar = B_bar;
  // W = Aq1 * A
  Aq1_bar += W_bar * c.A;
  A_bar += W_bar * c.Aq1;
  if (c.A > 0.0) {
    A_bar += Aq1_bar * (fr.q - 1.0) * c.Aq1 / c.A;
    q_bar += Aq1_bar * c.Aq1 * c.lnA;
  }
  // A = tx + ty
  double tx_bar = A_bar, ty_bar = A_bar;
  // t = P * m; P = exp((b-1) ln m)
  Px_bar += tx_bar * c.mx;
  Py_bar += ty_bar * c.my;
  Pz_bar += tz_bar * c.mz;
  double mx_bar = tx_bar * c.Px;
  double my_bar = ty_bar * c.Py;
  double mz_bar = tz_bar * c.Pz;
  if (c.mx > 0.0) {
    mx_bar += Px_bar * (fr.b2 - 1.0) * c.Px / c.mx;
    b2_bar += Px_bar * c.Px * c.lnmx;
  }
  if (c.my > 0.0) {
    my_bar += Py_bar * (fr.b2 - 1.0) * c.Py / c.my;
    b2_bar += Py_bar * c.Py * c.lnmy;
  }
  if (c.mz > 0.0) {
    mz_bar += Pz_bar * (fr.b1 - 1.0) * c.Pz / c.mz;
    b1_bar += Pz_bar * c.Pz * c.lnmz;
  }
  // m = |u|, u = pl .* inv_a
  const Vec3 u_bar(mx_bar * c.s.x(), my_bar * c.s.y(), mz_bar * c.s.z());
  pl_bar += u_bar.cwiseProduct(fr.inv_a);
  ia_bar += u_bar.cwiseProduct(c.pl);
  // pl = R^T d, d = p - T
  const Vec3 d_bar = fr.R * pl_bar;
  R_bar += c.d * pl_bar.transpose();
  adj->trans -= d_bar;
  // inv_a = 1 / a
  adj->scale -= ia_bar.cwiseProduct(fr.inv_a).cwiseProduct(fr.inv_a);
  // exponents: b1 = 2/e1, b2 = 2/e2, q = e2/e1, h = e1/2
  adj->shape.x() += -b1_bar * fr.b1 / fr.e1 - q_bar * fr.q / fr.e1 + 0.5 * h_bar;
  adj->shape.y() += -b2_bar * fr.b2 / fr.e2 + q_bar / fr.e1;
  // rotation angles via dR
  for (int k = 0; k < 3; ++k) adj->rot[k] += (R_bar.cwiseProduct(fr.dR[k])).sum();
}

}  // namespace sqc
