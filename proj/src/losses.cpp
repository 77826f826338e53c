#include "sqc/losses.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sqc {

double loss_rgb(const std::vector<Vec3>& render, const std::vector<Vec3>& gt,
                const std::vector<double>& gt_mask) {
  double sum = 0.0;
  for (size_t i = 0; i < render.size(); ++i) {
    sum += (render[i] - gt[i]).cwiseAbs().sum() * gt_mask[i];
  }
  return sum / double(render.size());
}

double loss_mask(const std::vector<double>& render, const std::vector<double>& gt) {
  double sum = 0.0;
  for (size_t i = 0; i < render.size(); ++i) {
    double m = render[i];
    if (m < 1e-6) m = 1e-6;
    if (m > 1.0 - 1e-6) m = 1.0 - 1e-6;
    sum += -(gt[i] * std::log(m) + (1.0 - gt[i]) * std::log(1.0 - m));
  }
  return sum / double(render.size());
}

double loss_sparse(const std::vector<double>& point_opacity, int k_eff) {
  if (k_eff == 0 || point_opacity.empty()) return 0.0;
  double sum = 0.0;
  for (double v : point_opacity) sum += v;
  return sum / (double(k_eff) * double(point_opacity.size()));
}

double loss_entropy(const std::vector<double>& contributions, int k_eff,
                    long long point_count) {
  if (k_eff == 0 || point_count == 0) return 0.0;
  double sum = 0.0;
  for (double u : contributions) sum += binary_entropy_clamped(u);
  return sum / (double(k_eff) * double(point_count));
}

double loss_max(const std::vector<double>& point_opacity, int k_eff) {
  if (k_eff == 0 || point_opacity.empty()) return 0.0;
  double sum = 0.0;
  for (double v : point_opacity) sum += std::max(v - 1.0, 0.0);
  return sum / (double(k_eff) * double(point_opacity.size()));
}

double loss_normal_reg(const std::vector<Vec3>& render, const std::vector<Vec3>& ref,
                       const std::vector<double>& gt_mask) {
  double sum = 0.0;
  for (size_t i = 0; i < render.size(); ++i) {
    sum += (render[i] - ref[i]).cwiseAbs().sum() * gt_mask[i];
  }
  return sum / double(render.size());
}

double total_loss(LossBreakdown* terms, const LossWeights& w) {
  const struct {
    const char* name;
    double value;
  } named[] = {{"rgb", terms->rgb},       {"mask", terms->mask},
               {"sparse", terms->sparse}, {"entropy", terms->entropy},
               {"max", terms->max_excess}, {"normal_reg", terms->normal_reg}};
  for (const auto& t : named) {
    if (!std::isfinite(t.value)) {
      throw std::runtime_error(std::string("non-finite loss term: ") + t.name);
    }
  }
  terms->total = terms->rgb + w.mask * terms->mask + w.sparse * terms->sparse +
                 w.entropy * terms->entropy + w.max_excess * terms->max_excess +
                 w.normal_reg * terms->normal_reg;
  return terms->total;
}

std::string loss_csv_header() {
  return "iteration,total,rgb,mask,sp,e,max,norm_reg,K_active";
}

std::string loss_csv_row(int64_t iteration, const LossBreakdown& b) {
  std::ostringstream os;
  os.precision(10);
  os << iteration << ',' << b.total << ',' << b.rgb << ',' << b.mask << ',' << b.sparse
     << ',' << b.entropy << ',' << b.max_excess << ',' << b.normal_reg << ','
     << b.k_active;
  return os.str();
}

}  // namespace sqc
