#include "sqc/lighting.h"

#include <algorithm>

namespace sqc {

namespace {

template <typename M>
void xavier_fill(M& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / double(m.rows() + m.cols()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  }
}

template <typename M>
void write_flat(const M& m, double*& out) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) *out++ = m(r, c);
  }
}

template <typename M>
void read_flat(M& m, const double*& in) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = *in++;
  }
}

template <typename M, typename G>
void accumulate_flat(const G& g, double*& out) {
  for (int r = 0; r < M::RowsAtCompileTime; ++r) {
    for (int c = 0; c < M::ColsAtCompileTime; ++c) *out++ += g(r, c);
  }
}

}  // namespace

LightingNet LightingNet::xavier(Rng& rng) {
  LightingNet n;
  // Row-major draw order matches the flat layout so init is layout-stable.
  xavier_fill(n.w1, rng);
  n.b1.setZero();
  xavier_fill(n.w2, rng);
  n.b2.setZero();
  xavier_fill(n.w3, rng);
  n.b3.setZero();
  xavier_fill(n.w4, rng);
  n.b4.setZero();
  return n;
}

void LightingNet::to_flat(double* out) const {
  write_flat(w1, out);
  write_flat(b1, out);
  write_flat(w2, out);
  write_flat(b2, out);
  write_flat(w3, out);
  write_flat(b3, out);
  write_flat(w4, out);
  write_flat(b4, out);
}

LightingNet LightingNet::from_flat(const double* in) {
  LightingNet n;
  read_flat(n.w1, in);
  read_flat(n.b1, in);
  read_flat(n.w2, in);
  read_flat(n.b2, in);
  read_flat(n.w3, in);
  read_flat(n.b3, in);
  read_flat(n.w4, in);
  read_flat(n.b4, in);
  return n;
}

Vec3 LightingNet::eval(const Vec3& p) const {
  LightingCache c;
  return lighting_eval_cached(*this, p, &c);
}

Vec3 lighting_eval_cached(const LightingNet& net, const Vec3& p, LightingCache* c) {
  c->p = p;
  c->a1 = (net.w1 * p + net.b1).array().tanh();
  c->a2 = (net.w2 * c->a1 + net.b2).array().tanh();
  c->a3 = (net.w3 * c->a2 + net.b3).array().tanh();
  c->a4 = (net.w4 * c->a3 + net.b4).array().tanh();
  return 0.5 * c->a4;
}

void lighting_eval_block(const LightingNet& net, const double* pts, int n, double* colors) {
  constexpr int kChunk = 4096;
  using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
  for (int at = 0; at < n; at += kChunk) {
    const int c = std::min(kChunk, n - at);
    const Eigen::Map<const Mat3X> x(pts + 3 * at, 3, c);
    Eigen::Map<Mat3X> out(colors + 3 * at, 3, c);
    const auto a1 = ((net.w1 * x).colwise() + net.b1).array().tanh().matrix().eval();
    const auto a2 = ((net.w2 * a1).colwise() + net.b2).array().tanh().matrix().eval();
    const auto a3 = ((net.w3 * a2).colwise() + net.b3).array().tanh().matrix().eval();
    out = 0.5 * ((net.w4 * a3).colwise() + net.b4).array().tanh().matrix();
  }
}

void lighting_backward_block(const LightingNet& net, const double* pts, const double* dcolor,
                             int n, double* grad_segment) {
  constexpr int kChunk = 4096;
  constexpr int kH = LightingNet::kH;
  using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
  using MatHX = Eigen::Matrix<double, kH, Eigen::Dynamic>;
  using VecH = Eigen::Matrix<double, kH, 1>;

  Eigen::Matrix<double, kH, 3> dw1 = Eigen::Matrix<double, kH, 3>::Zero();
  Eigen::Matrix<double, kH, kH> dw2 = Eigen::Matrix<double, kH, kH>::Zero();
  Eigen::Matrix<double, kH, kH> dw3 = Eigen::Matrix<double, kH, kH>::Zero();
  Eigen::Matrix<double, 3, kH> dw4 = Eigen::Matrix<double, 3, kH>::Zero();
  VecH db1 = VecH::Zero(), db2 = VecH::Zero(), db3 = VecH::Zero();
  Vec3 db4 = Vec3::Zero();

  for (int at = 0; at < n; at += kChunk) {
    const int c = std::min(kChunk, n - at);
    const Eigen::Map<const Mat3X> x(pts + 3 * at, 3, c);
    const Eigen::Map<const Mat3X> dc(dcolor + 3 * at, 3, c);
    const MatHX a1 = ((net.w1 * x).colwise() + net.b1).array().tanh();
    const MatHX a2 = ((net.w2 * a1).colwise() + net.b2).array().tanh();
    const MatHX a3 = ((net.w3 * a2).colwise() + net.b3).array().tanh();
    const Mat3X a4 = ((net.w4 * a3).colwise() + net.b4).array().tanh();

    const Mat3X dz4 = (0.5 * dc.array() * (1.0 - a4.array().square())).matrix();
    dw4.noalias() += dz4 * a3.transpose();
    db4 += dz4.rowwise().sum();
    const MatHX dz3 =
        ((net.w4.transpose() * dz4).array() * (1.0 - a3.array().square())).matrix();
    dw3.noalias() += dz3 * a2.transpose();
    db3 += dz3.rowwise().sum();
    const MatHX dz2 =
        ((net.w3.transpose() * dz3).array() * (1.0 - a2.array().square())).matrix();
    dw2.noalias() += dz2 * a1.transpose();
    db2 += dz2.rowwise().sum();
    const MatHX dz1 =
        ((net.w2.transpose() * dz2).array() * (1.0 - a1.array().square())).matrix();
    dw1.noalias() += dz1 * x.transpose();
    db1 += dz1.rowwise().sum();
  }

  double* g = grad_segment;
  accumulate_flat<Eigen::Matrix<double, kH, 3>>(dw1, g);
  accumulate_flat<VecH>(db1, g);
  accumulate_flat<Eigen::Matrix<double, kH, kH>>(dw2, g);
  accumulate_flat<VecH>(db2, g);
  accumulate_flat<Eigen::Matrix<double, kH, kH>>(dw3, g);
  accumulate_flat<VecH>(db3, g);
  accumulate_flat<Eigen::Matrix<double, 3, kH>>(dw4, g);
  accumulate_flat<Vec3>(db4, g);
}

Vec3 lighting_backward(const LightingNet& net, const LightingCache& c, const Vec3& dcolor,
                       double* grad_segment) {
  using VecH = Eigen::Matrix<double, LightingNet::kH, 1>;
  const Vec3 dz4 = (0.5 * dcolor.array() * (1.0 - c.a4.array().square())).matrix();
  const VecH da3 = net.w4.transpose() * dz4;
  const VecH dz3 = (da3.array() * (1.0 - c.a3.array().square())).matrix();
  const VecH da2 = net.w3.transpose() * dz3;
  const VecH dz2 = (da2.array() * (1.0 - c.a2.array().square())).matrix();
  const VecH da1 = net.w2.transpose() * dz2;
  const VecH dz1 = (da1.array() * (1.0 - c.a1.array().square())).matrix();

  double* g = grad_segment;
  accumulate_flat<Eigen::Matrix<double, LightingNet::kH, 3>>(dz1 * c.p.transpose(), g);
  accumulate_flat<VecH>(dz1, g);
  accumulate_flat<Eigen::Matrix<double, LightingNet::kH, LightingNet::kH>>(
      dz2 * c.a1.transpose(), g);
  accumulate_flat<VecH>(dz2, g);
  accumulate_flat<Eigen::Matrix<double, LightingNet::kH, LightingNet::kH>>(
      dz3 * c.a2.transpose(), g);
  accumulate_flat<VecH>(dz3, g);
  accumulate_flat<Eigen::Matrix<double, 3, LightingNet::kH>>(dz4 * c.a3.transpose(), g);
  accumulate_flat<Vec3>(dz4, g);

  return net.w1.transpose() * dz1;
}

}  // namespace sqc
