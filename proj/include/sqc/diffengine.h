#pragma once

#include <functional>

#include "sqc/render_grad.h"

namespace sqc {

// Scalar objective of the raw parameter vector. `value` is the plain forward
// (used for finite differencing); `value_and_grad` additionally fills the
// analytic gradient (resized to the parameter count) and, when given a
// breakdown sink, the per-term decomposition.
struct Objective {
  std::function<double(const ParamVector&)> value;
  std::function<double(const ParamVector&, std::vector<double>*, LossBreakdown*)>
      value_and_grad;
};

Objective make_render_objective(const std::vector<RayBatchEntry>& batch,
                                const TrainLossOptions& opt);

struct GradientBundle {
  double loss = 0.0;
  LossBreakdown breakdown;
  std::vector<double> grad;  // d(loss)/d(raw), ParamVector layout
};

// Exact derivatives of the objective. Throws on non-finite entries, naming
// the first offending flat slot.
GradientBundle grad(const Objective& obj, const ParamVector& params);

struct FdReport {
  double max_rel = 0.0;
  double mean_rel = 0.0;
  std::vector<int> offenders;  // flat indices with relative error above tol
  bool pass = true;
};

// Central-difference comparison per coordinate. The error scale for each
// coordinate is max(|analytic|, |numeric|, abs_tol / tol), so derivatives
// smaller than abs_tol pass regardless of their relative disagreement.
FdReport fd_check(const Objective& obj, const ParamVector& params, double h, double tol,
                  double abs_tol = 1e-6);

}  // namespace sqc
