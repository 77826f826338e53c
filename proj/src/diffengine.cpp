#include "sqc/diffengine.h"

#include <cmath>
#include <stdexcept>

namespace sqc {

Objective make_render_objective(const std::vector<RayBatchEntry>& batch,
                                const TrainLossOptions& opt) {
  Objective obj;
  obj.value = [&batch, opt](const ParamVector& pv) {
    return render_loss_grad(pv, batch, opt, nullptr).total;
  };
  obj.value_and_grad = [&batch, opt](const ParamVector& pv, std::vector<double>* g,
                                     LossBreakdown* bd) {
    LossBreakdown b = render_loss_grad(pv, batch, opt, g);
    if (bd != nullptr) *bd = b;
    return b.total;
  };
  return obj;
}

GradientBundle grad(const Objective& obj, const ParamVector& params) {
  GradientBundle out;
  out.loss = obj.value_and_grad(params, &out.grad, &out.breakdown);
  if (int(out.grad.size()) != params.size()) {
    throw std::runtime_error("gradient length does not match parameter layout");
  }
  for (int i = 0; i < int(out.grad.size()); ++i) {
    if (!std::isfinite(out.grad[i])) {
      throw std::runtime_error("non-finite gradient at " + params.layout.describe(i));
    }
  }
  return out;
}

FdReport fd_check(const Objective& obj, const ParamVector& params, double h, double tol,
                  double abs_tol) {
  std::vector<double> analytic;
  obj.value_and_grad(params, &analytic, nullptr);

  FdReport rep;
  ParamVector probe = params;
  double rel_sum = 0.0;
  const int n = params.size();
  for (int i = 0; i < n; ++i) {
    const double saved = probe.raw[i];
    probe.raw[i] = saved + h;
    const double fp = obj.value(probe);
    probe.raw[i] = saved - h;
    const double fm = obj.value(probe);
    probe.raw[i] = saved;

    const double numeric = (fp - fm) / (2.0 * h);
    const double diff = std::abs(analytic[i] - numeric);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), abs_tol / tol});
    const double rel = diff / scale;
    rel_sum += rel;
    rep.max_rel = std::max(rep.max_rel, rel);
    if (rel > tol) rep.offenders.push_back(i);
  }
  rep.mean_rel = n > 0 ? rel_sum / n : 0.0;
  rep.pass = rep.offenders.empty();
  return rep;
}

}  // namespace sqc
