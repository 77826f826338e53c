#pragma once

#include "sqc/params.h"
#include "sqc/rng.h"

namespace sqc {

// Shared residual color field C(p): dense 3->64->64->64->3, tanh activations,
// output tanh scaled by 0.5 so the residual stays in [-0.5, 0.5].
struct LightingNet {
  static constexpr int kH = ParamLayout::kHidden;
  Eigen::Matrix<double, kH, 3> w1;
  Eigen::Matrix<double, kH, 1> b1;
  Eigen::Matrix<double, kH, kH> w2;
  Eigen::Matrix<double, kH, 1> b2;
  Eigen::Matrix<double, kH, kH> w3;
  Eigen::Matrix<double, kH, 1> b3;
  Eigen::Matrix<double, 3, kH> w4;
  Eigen::Matrix<double, 3, 1> b4;

  // Weights drawn Xavier-uniform (+-sqrt(6/(fan_in+fan_out))), biases zero.
  static LightingNet xavier(Rng& rng);

  // Flat row-major (de)serialization matching the ParamVector lighting segment.
  void to_flat(double* out) const;
  static LightingNet from_flat(const double* in);

  Vec3 eval(const Vec3& p) const;
};

struct LightingCache {
  Vec3 p;
  Eigen::Matrix<double, LightingNet::kH, 1> a1, a2, a3;  // post-tanh activations
  Vec3 a4;                                               // tanh of final preact
};

Vec3 lighting_eval_cached(const LightingNet& net, const Vec3& p, LightingCache* c);

// GEMM-batched forward over n points (column-major xyz triples in pts).
// Writes 3*n residual colors. Matches eval() up to summation order.
void lighting_eval_block(const LightingNet& net, const double* pts, int n, double* colors);

// Batched weight-gradient accumulation for the same point block: recomputes
// activations chunk-wise and adds d(objective)/d(weights) into the flat
// lighting segment for the given color adjoints (3*n). Zero columns are free,
// so callers may leave untouched points at dcolor = 0.
void lighting_backward_block(const LightingNet& net, const double* pts, const double* dcolor,
                             int n, double* grad_segment);

// Accumulates parameter gradients into the flat lighting segment layout and
// returns d(objective)/dp (unused by callers today but exact).
Vec3 lighting_backward(const LightingNet& net, const LightingCache& c, const Vec3& dcolor,
                       double* grad_segment);

}  // namespace sqc
