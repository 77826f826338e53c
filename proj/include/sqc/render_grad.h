#pragma once

#include "sqc/losses.h"
#include "sqc/params.h"
#include "sqc/renderer.h"

namespace sqc {

struct RayBatchEntry {
  RaySamples samples;
  Vec3 gt_rgb = Vec3::Zero();
  double gt_mask = 0.0;
  Vec3 gt_normal = Vec3::Zero();
  bool has_normal = false;
};

struct TrainLossOptions {
  LossWeights weights;
  double mu = 0.05;
  // Render and supervise normals. Rays without a reference normal contribute
  // zero to that term either way.
  bool use_normals = false;
};

// Total training loss over one ray batch. When grad is non-null it is resized
// to the parameter count and filled with exact d(total)/d(raw), accumulated
// serially so results are bit-reproducible. Throws on non-finite terms or
// gradient entries, naming the offender.
LossBreakdown render_loss_grad(const ParamVector& pv, const std::vector<RayBatchEntry>& batch,
                               const TrainLossOptions& opt, std::vector<double>* grad);

}  // namespace sqc
