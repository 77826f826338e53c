#include "sqc/renderer.h"

#include "sqc/geometry.h"

namespace sqc {

double point_density(const std::vector<DualPrimitive>& prims, const Vec3& p,
                     const Vec3& delta_p, double mu, std::vector<double>* weights) {
  const int k = int(prims.size());
  if (weights != nullptr) weights->assign(k, 0.0);
  double sigma = 0.0;
  std::vector<double> u(k, 0.0);
  for (int i = 0; i < k; ++i) {
    if (prims[i].alpha <= 0.0) continue;
    u[i] = prims[i].alpha * primitive_density(prims[i], p, delta_p, mu);
    sigma += u[i];
  }
  if (weights != nullptr && sigma > 1e-12) {
    for (int i = 0; i < k; ++i) (*weights)[i] = u[i] / sigma;
  }
  return sigma;
}

Vec3 point_color(const std::vector<DualPrimitive>& prims, const std::vector<double>& weights,
                 const Vec3& p, const LightingNet* net) {
  double total = 0.0;
  Vec3 c = Vec3::Zero();
  for (size_t i = 0; i < prims.size(); ++i) {
    c += prims[i].basic_color * weights[i];
    total += weights[i];
  }
  if (total == 0.0) return Vec3::Zero();
  if (net != nullptr) c += net->eval(p);
  return c;
}

CompositeOut composite(const std::vector<double>& t, const std::vector<double>& delta,
                       const std::vector<double>& sigma, const std::vector<Vec3>& color,
                       const std::vector<Vec3>& normal) {
  CompositeOut out;
  double trans = 1.0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double a = -std::expm1(-sigma[i] * delta[i]);
    const double w = trans * a;
    out.rgb += w * color[i];
    out.mask += w;
    if (!normal.empty()) out.normal += w * normal[i];
    out.depth += w * t[i];
    trans *= 1.0 - a;
  }
  out.depth /= std::max(out.mask, 1e-6);
  return out;
}

Vec3 merged_normal_at(const PrimitiveFrame& pf, const PrimRayCtx& ctx, const Vec3& p,
                      double t) {
  QuadricCache cp;
  quadric_eval(pf.psq, p, true, &cp);
  double pe = 0.0;
  Vec3 dn = Vec3::Zero();
  if (t >= ctx.na && t <= ctx.nb) {
    QuadricCache cn;
    quadric_eval(pf.nsq, p, true, &cn);
    pe = sigmoid(-cp.f / pf.theta_c - pf.mu) * sigmoid(-cn.f / pf.theta_c - pf.mu);
    const double nn = cn.grad_world.norm();
    if (nn > 0.0) dn = cn.grad_world / nn;
  }
  const double np = cp.grad_world.norm();
  const Vec3 dp = np > 0.0 ? Vec3(cp.grad_world / np) : Vec3::Zero();
  const Vec3 blend = dp * (1.0 - pe) - dn * pe;
  const double bl = blend.norm();
  if (bl < 1e-12) return np > 0.0 ? dp : Vec3(0, 0, 1);
  return blend / bl;
}

RenderBuffers render_image(const std::vector<DualPrimitive>& prims, const LightingNet* net,
                           const Camera& cam, const RenderOptions& opt) {
  RenderBuffers buf;
  buf.width = cam.width;
  buf.height = cam.height;
  const int np = cam.width * cam.height;
  buf.rgb.assign(np, Vec3::Zero());
  buf.mask.assign(np, 0.0);
  buf.normal.assign(np, Vec3::Zero());
  buf.depth.assign(np, 0.0);
  buf.prim_max_weight.assign(prims.size(), 0.0);

  std::vector<PrimitiveFrame> frames;
  std::vector<int> slot;  // frame -> primitive index
  for (size_t k = 0; k < prims.size(); ++k) {
    if (prims[k].alpha <= 0.0) continue;
    frames.push_back(make_primitive_frame(prims[k], opt.mu));
    slot.push_back(int(k));
  }

  std::vector<PrimRayCtx> ctx(frames.size());
  std::vector<int> active;
  active.reserve(frames.size());
  std::vector<std::pair<int, double>> contrib;  // (frame idx, alpha * sigma_prim)

  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const int pix = buf.idx(col, row);
      Rng rng = Rng::stream(opt.seed, opt.iteration, uint64_t(pix));
      const RaySamples ray =
          make_ray_samples(cam, col, row, opt.n_samples, opt.jitter ? &rng : nullptr);
      if (ray.t.empty()) continue;

      const double seg0 = ray.t.front() - ray.delta.front() * 0.5;
      const double seg1 = ray.t.back() + ray.delta.back() * 0.5;
      active.clear();
      for (size_t f = 0; f < frames.size(); ++f) {
        if (make_prim_ray_ctx(frames[f], ray.o, ray.v, seg0, seg1, &ctx[f])) {
          active.push_back(int(f));
        }
      }
      if (active.empty()) continue;

      double trans = 1.0;
      Vec3 rgb = Vec3::Zero(), nrm = Vec3::Zero();
      double mask = 0.0, depth = 0.0;
      for (size_t i = 0; i < ray.t.size() && trans > 1e-10; ++i) {
        const double t = ray.t[i], half = ray.delta[i] * 0.5;
        contrib.clear();
        double sigma = 0.0;
        for (int f : active) {
          if (t + half < ctx[f].ta || t - half > ctx[f].tb) continue;
          const double fn = merged_f_at(frames[f], ctx[f], t - half);
          const double ff = merged_f_at(frames[f], ctx[f], t + half);
          const double s = density_from_pair(fn, ff, frames[f].theta_c, ray.delta[i]);
          if (s <= 0.0) continue;
          const double u = frames[f].alpha * s;
          contrib.emplace_back(f, u);
          sigma += u;
        }

        const double a = -std::expm1(-sigma * ray.delta[i]);
        const double w = trans * a;

        Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
        if (sigma > 1e-12) {
          const Vec3 p = ray.o + t * ray.v;
          for (const auto& [f, u] : contrib) {
            const double bw = u / sigma;
            color += frames[f].color * bw;
            if (opt.normals) normal += bw * merged_normal_at(frames[f], ctx[f], p, t);
            // Rendering weight of the primitive at this sample: compositing
            // weight times blend share. Occluded primitives score ~0 here.
            double& mw = buf.prim_max_weight[slot[f]];
            mw = std::max(mw, w * bw);
          }
          if (net != nullptr) color += net->eval(p);
        }
        rgb += w * color;
        mask += w;
        nrm += w * normal;
        depth += w * t;
        trans *= 1.0 - a;
      }
      buf.rgb[pix] = rgb;
      buf.mask[pix] = mask;
      buf.normal[pix] = nrm;
      buf.depth[pix] = depth / std::max(mask, 1e-6);
    }
  }
  return buf;
}

}  // namespace sqc
