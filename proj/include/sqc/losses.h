#pragma once

#include <string>
#include <vector>

#include "sqc/mathutil.h"

namespace sqc {

struct LossWeights {
  double mask = 0.5;
  double sparse = 0.01;
  double entropy = 0.01;
  double max_excess = 0.1;
  double normal_reg = 0.05;
};

struct LossBreakdown {
  double total = 0.0;
  double rgb = 0.0;
  double mask = 0.0;
  double sparse = 0.0;
  double entropy = 0.0;
  double max_excess = 0.0;
  double normal_reg = 0.0;
  bool normal_missing = false;  // flagged when reference normals are unavailable
  int k_active = 0;
};

// Binary entropy with the [1e-6, 1-1e-6] clamp used by the entropy loss.
constexpr double kOpacityClamp = 1e-6;
inline double binary_entropy_clamped(double u) {
  if (u < kOpacityClamp) u = kOpacityClamp;
  if (u > 1.0 - kOpacityClamp) u = 1.0 - kOpacityClamp;
  return -(u * std::log(u) + (1.0 - u) * std::log(1.0 - u));
}
// Derivative of the above in the unclamped region, 0 where the clamp binds.
inline double binary_entropy_clamped_grad(double u) {
  if (u <= kOpacityClamp || u >= 1.0 - kOpacityClamp) return 0.0;
  return std::log((1.0 - u) / u);
}

// Photometric L1, masked by the ground-truth silhouette, per-ray channel sum
// normalized by batch size.
double loss_rgb(const std::vector<Vec3>& render, const std::vector<Vec3>& gt,
                const std::vector<double>& gt_mask);

// Mean binary cross-entropy; predictions clamped to [1e-6, 1-1e-6].
double loss_mask(const std::vector<double>& render, const std::vector<double>& gt);

// Mean aggregated point opacity over sampled points, scaled by 1/K. K is the
// count of primitives with nonzero transparency, so absent primitives do not
// dilute the normalization.
double loss_sparse(const std::vector<double>& point_opacity, int k_eff);

// Mean clamped binary entropy of per-primitive opacity contributions; the
// values list holds one entry per (point, active primitive) pair and
// point_count is the number of sampled points.
double loss_entropy(const std::vector<double>& contributions, int k_eff,
                    long long point_count);

// Mean soft penalty on aggregated opacity above 1, scaled by 1/K.
double loss_max(const std::vector<double>& point_opacity, int k_eff);

// Masked L1 between rendered and reference normals, batch-normalized.
double loss_normal_reg(const std::vector<Vec3>& render, const std::vector<Vec3>& ref,
                       const std::vector<double>& gt_mask);

// Weighted sum; fills breakdown.total. Throws naming the first non-finite term.
double total_loss(LossBreakdown* terms, const LossWeights& w);

std::string loss_csv_header();
std::string loss_csv_row(int64_t iteration, const LossBreakdown& b);

}  // namespace sqc
