#include "sqc/render_grad.h"

#include <stdexcept>

namespace sqc {

namespace {

struct Contrib {
  int frame;      // index into the active-frame array
  double s;       // per-primitive section density (before alpha)
  Vec3 nhat;      // merged unit normal at the sample center (when tracked)
};

struct SampleFwd {
  double sigma = 0.0;  // aggregated opacity sum_k alpha_k * s_k
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

struct RayFwd {
  std::vector<PrimRayCtx> ctx;  // parallel to frames
  std::vector<int> active;
  std::vector<SampleFwd> samples;
  std::vector<int> contrib_begin;  // size M+1
  std::vector<Contrib> contribs;
  std::vector<int> net_col;  // sample -> lighting block column, -1 if unlit
  CompositeOut out;
};

struct PrimGradSlots {
  // Constrained-space accumulation targets for one primitive block.
  double* base = nullptr;  // 27 slots
  void add_quadric(int offset, const QuadricAdjoint& a) {
    for (int i = 0; i < 3; ++i) base[offset + i] += a.scale[i];
    for (int i = 0; i < 2; ++i) base[offset + 3 + i] += a.shape[i];
    for (int i = 0; i < 3; ++i) base[offset + 5 + i] += a.trans[i];
    for (int i = 0; i < 3; ++i) base[offset + 8 + i] += a.rot[i];
  }
};

// Merged field value at a world point via cached quadric evaluations,
// followed by the adjoint into parameter slots. want_grad extends the caches
// for the spatial-gradient path (normals).
struct MergedPointEval {
  QuadricCache cp, cn;
  bool nsq_on = false;
  double fp = 0.0, fn = 0.0, pe = 0.0;
  double F = 0.0;

  void forward(const PrimitiveFrame& pf, const PrimRayCtx& ctx, const Vec3& p, double t,
               bool want_grad) {
    fp = quadric_eval(pf.psq, p, want_grad, &cp);
    nsq_on = t >= ctx.na && t <= ctx.nb;
    if (nsq_on) {
      fn = quadric_eval(pf.nsq, p, want_grad, &cn);
      pe = sigmoid(-fp / pf.theta_c - pf.mu) * sigmoid(-fn / pf.theta_c - pf.mu);
      F = fp - pe * (fp + fn);
    } else {
      fn = 0.0;
      pe = 0.0;
      F = fp;
    }
  }

  // dF plus optional erase-probability adjoint from the normal path. Returns
  // the sharpness adjoint; quadric adjoints accumulate into adj_p / adj_n.
  double backward_value(const PrimitiveFrame& pf, double dF, double dpe_extra,
                        QuadricAdjoint* adj_p, QuadricAdjoint* adj_n, const Vec3* gbar_p,
                        const Vec3* gbar_n) {
    double dtheta = 0.0;
    if (!nsq_on) {
      quadric_backward(pf.psq, cp, dF, gbar_p, adj_p);
      return 0.0;
    }
    double dfp = dF * (1.0 - pe);
    double dfn = -dF * pe;
    const double dpe = -dF * (fp + fn) + dpe_extra;
    const double sp = sigmoid(-fp / pf.theta_c - pf.mu);
    const double sn = sigmoid(-fn / pf.theta_c - pf.mu);
    const double dgp = dpe * sp * (1.0 - sp) * sn;
    const double dgn = dpe * sp * sn * (1.0 - sn);
    dfp -= dgp / pf.theta_c;
    dfn -= dgn / pf.theta_c;
    dtheta += (dgp * fp + dgn * fn) / (pf.theta_c * pf.theta_c);
    quadric_backward(pf.psq, cp, dfp, gbar_p, adj_p);
    quadric_backward(pf.nsq, cn, dfn, gbar_n, adj_n);
    return dtheta;
  }
};

// Normal blend forward from gradient-bearing caches; mirrors merged_normal_at.
struct NormalBlend {
  Vec3 dp = Vec3::Zero(), dn = Vec3::Zero();
  double np = 0.0, nn = 0.0;
  Vec3 blend = Vec3::Zero();
  double bl = 0.0;
  Vec3 n = Vec3(0, 0, 1);
  bool fallback = false;

  void forward(const MergedPointEval& ev) {
    np = ev.cp.grad_world.norm();
    if (np > 0.0) dp = ev.cp.grad_world / np;
    const double pe = ev.nsq_on ? ev.pe : 0.0;
    if (ev.nsq_on) {
      nn = ev.cn.grad_world.norm();
      if (nn > 0.0) dn = ev.cn.grad_world / nn;
    }
    blend = dp * (1.0 - pe) - dn * pe;
    bl = blend.norm();
    if (bl < 1e-12) {
      fallback = true;
      n = np > 0.0 ? dp : Vec3(0, 0, 1);
    } else {
      n = blend / bl;
    }
  }

  // Routes d(n) into gradient-vector adjoints and the erase-prob adjoint.
  void backward(const MergedPointEval& ev, const Vec3& dnormal, Vec3* gbar_p, Vec3* gbar_n,
                double* dpe_out) {
    Vec3 ddp = Vec3::Zero(), ddn = Vec3::Zero();
    if (fallback) {
      if (np > 0.0) ddp = dnormal;  // n == dp; erase prob not involved
    } else {
      const Vec3 dblend = (dnormal - n * n.dot(dnormal)) / bl;
      const double pe = ev.nsq_on ? ev.pe : 0.0;
      ddp = dblend * (1.0 - pe);
      ddn = -dblend * pe;
      if (ev.nsq_on) *dpe_out += -dblend.dot(dp + dn);
    }
    if (np > 0.0) *gbar_p += (ddp - dp * dp.dot(ddp)) / np;
    if (ev.nsq_on && nn > 0.0) *gbar_n += (ddn - dn * dn.dot(ddn)) / nn;
  }
};

double bce_clamped(double m, double y) {
  if (m < 1e-6) m = 1e-6;
  if (m > 1.0 - 1e-6) m = 1.0 - 1e-6;
  return -(y * std::log(m) + (1.0 - y) * std::log(1.0 - m));
}

double bce_grad(double m, double y) {
  if (m <= 1e-6 || m >= 1.0 - 1e-6) return 0.0;  // clamp region is flat
  return (m - y) / (m * (1.0 - m));
}

inline Vec3 sign_vec(const Vec3& v) {
  return Vec3(sgn(v.x()), sgn(v.y()), sgn(v.z()));
}

}  // namespace

LossBreakdown render_loss_grad(const ParamVector& pv, const std::vector<RayBatchEntry>& batch,
                               const TrainLossOptions& opt, std::vector<double>* grad) {
  const int K = pv.layout.num_primitives;
  std::vector<DualPrimitive> prims(K);
  for (int k = 0; k < K; ++k) prims[k] = pv.primitive(k);

  std::vector<PrimitiveFrame> frames;
  std::vector<int> slot;       // frame -> primitive index
  std::vector<bool> theta_on;  // sharpness clamp inactive => gradient flows
  for (int k = 0; k < K; ++k) {
    if (prims[k].alpha <= 0.0) continue;
    frames.push_back(make_primitive_frame(prims[k], opt.mu));
    slot.push_back(k);
    theta_on.push_back(prims[k].theta >= kThetaMin);
  }
  const int k_eff = int(frames.size());
  const LightingNet net =
      LightingNet::from_flat(pv.raw.data() + pv.layout.lighting_offset());

  const double h0 = binary_entropy_clamped(0.0);

  // Forward pass over every ray, retaining what the backward pass needs.
  std::vector<RayFwd> fwd(batch.size());
  double rgb_sum = 0.0, mask_sum = 0.0, nr_sum = 0.0;
  double sparse_sum = 0.0, ent_sum = 0.0, max_sum = 0.0;
  long long point_count = 0;
  bool any_normal_target = false;

  // Lighting is evaluated and differentiated in GEMM blocks over every lit
  // sample of the whole batch; per-sample MLP passes dominate otherwise.
  std::vector<double> net_pts;
  std::vector<std::pair<int, int>> net_at;  // (ray, sample) per block column

  for (size_t r = 0; r < batch.size(); ++r) {
    const RaySamples& ray = batch[r].samples;
    RayFwd& rf = fwd[r];
    const size_t m = ray.t.size();
    rf.samples.resize(m);
    rf.contrib_begin.assign(m + 1, 0);
    rf.net_col.assign(m, -1);
    if (m > 0) {
      const double seg0 = ray.t.front() - ray.delta.front() * 0.5;
      const double seg1 = ray.t.back() + ray.delta.back() * 0.5;
      rf.ctx.resize(frames.size());
      for (int f = 0; f < k_eff; ++f) {
        if (make_prim_ray_ctx(frames[f], ray.o, ray.v, seg0, seg1, &rf.ctx[f])) {
          rf.active.push_back(f);
        }
      }
      for (size_t i = 0; i < m; ++i) {
        const double t = ray.t[i], half = ray.delta[i] * 0.5;
        SampleFwd& sf = rf.samples[i];
        for (int f : rf.active) {
          const PrimRayCtx& cx = rf.ctx[f];
          if (t + half < cx.ta || t - half > cx.tb) continue;
          const double fnear = merged_f_at(frames[f], cx, t - half);
          const double ffar = merged_f_at(frames[f], cx, t + half);
          const double s = density_from_pair(fnear, ffar, frames[f].theta_c, ray.delta[i]);
          if (s <= 0.0) continue;
          rf.contribs.push_back({f, s, Vec3::Zero()});
          sf.sigma += frames[f].alpha * s;
        }
        rf.contrib_begin[i + 1] = int(rf.contribs.size());

        const int nc = rf.contrib_begin[i + 1] - rf.contrib_begin[i];
        ent_sum += h0 * double(k_eff - nc);
        if (sf.sigma > 1e-12) {
          const Vec3 p = ray.o + t * ray.v;
          for (int j = rf.contrib_begin[i]; j < rf.contrib_begin[i + 1]; ++j) {
            Contrib& c = rf.contribs[j];
            const double u = frames[c.frame].alpha * c.s;
            ent_sum += binary_entropy_clamped(u);
            const double w = u / sf.sigma;
            sf.color += frames[c.frame].color * w;
            if (opt.use_normals) {
              c.nhat = merged_normal_at(frames[c.frame], rf.ctx[c.frame], p, t);
              sf.normal += w * c.nhat;
            }
          }
          rf.net_col[i] = int(net_at.size());
          net_at.emplace_back(int(r), int(i));
          net_pts.insert(net_pts.end(), {p.x(), p.y(), p.z()});
        } else {
          for (int j = rf.contrib_begin[i]; j < rf.contrib_begin[i + 1]; ++j) {
            ent_sum += binary_entropy_clamped(frames[rf.contribs[j].frame].alpha *
                                              rf.contribs[j].s);
          }
        }
        sparse_sum += sf.sigma;
        max_sum += std::max(sf.sigma - 1.0, 0.0);
        ++point_count;
      }
    }
  }

  std::vector<double> net_colors(net_pts.size());
  lighting_eval_block(net, net_pts.data(), int(net_at.size()), net_colors.data());
  for (size_t c = 0; c < net_at.size(); ++c) {
    fwd[size_t(net_at[c].first)].samples[size_t(net_at[c].second)].color +=
        Vec3(net_colors[3 * c], net_colors[3 * c + 1], net_colors[3 * c + 2]);
  }

  for (size_t r = 0; r < batch.size(); ++r) {
    const RaySamples& ray = batch[r].samples;
    RayFwd& rf = fwd[r];
    const size_t m = ray.t.size();
    if (m > 0) {
      double trans = 1.0;
      for (size_t i = 0; i < m; ++i) {
        const double a = -std::expm1(-rf.samples[i].sigma * ray.delta[i]);
        const double w = trans * a;
        rf.out.rgb += w * rf.samples[i].color;
        rf.out.mask += w;
        rf.out.normal += w * rf.samples[i].normal;
        rf.out.depth += w * ray.t[i];
        trans *= 1.0 - a;
      }
      rf.out.depth /= std::max(rf.out.mask, 1e-6);
    }

    rgb_sum += (rf.out.rgb - batch[r].gt_rgb).cwiseAbs().sum() * batch[r].gt_mask;
    mask_sum += bce_clamped(rf.out.mask, batch[r].gt_mask);
    if (opt.use_normals && batch[r].has_normal) {
      any_normal_target = true;
      nr_sum += (rf.out.normal - batch[r].gt_normal).cwiseAbs().sum() * batch[r].gt_mask;
    }
  }

  const double B = double(batch.size());
  const double reg_denom =
      k_eff > 0 && point_count > 0 ? double(k_eff) * double(point_count) : 1.0;

  LossBreakdown out;
  out.rgb = rgb_sum / B;
  out.mask = mask_sum / B;
  out.sparse = sparse_sum / reg_denom;
  out.entropy = ent_sum / reg_denom;
  out.max_excess = max_sum / reg_denom;
  out.normal_reg = nr_sum / B;
  out.normal_missing = opt.use_normals && !any_normal_target;
  out.k_active = k_eff;
  total_loss(&out, opt.weights);

  if (grad == nullptr) return out;
  grad->assign(pv.size(), 0.0);
  double* gl = grad->data() + pv.layout.lighting_offset();

  const double d_sp = opt.weights.sparse / reg_denom;
  const double d_max = opt.weights.max_excess / reg_denom;
  const double d_ent = opt.weights.entropy / reg_denom;

  std::vector<double> net_dc(net_pts.size(), 0.0);
  std::vector<double> alphas, tprefix, dwblend;
  for (size_t r = 0; r < batch.size(); ++r) {
    const RaySamples& ray = batch[r].samples;
    const RayFwd& rf = fwd[r];
    const size_t m = ray.t.size();
    if (m == 0) continue;

    const Vec3 dI = sign_vec(rf.out.rgb - batch[r].gt_rgb) * (batch[r].gt_mask / B);
    const double dM = opt.weights.mask * bce_grad(rf.out.mask, batch[r].gt_mask) / B;
    Vec3 dN = Vec3::Zero();
    if (opt.use_normals && batch[r].has_normal) {
      dN = sign_vec(rf.out.normal - batch[r].gt_normal) *
           (opt.weights.normal_reg * batch[r].gt_mask / B);
    }

    alphas.resize(m);
    tprefix.resize(m + 1);
    tprefix[0] = 1.0;
    for (size_t i = 0; i < m; ++i) {
      alphas[i] = -std::expm1(-rf.samples[i].sigma * ray.delta[i]);
      tprefix[i + 1] = tprefix[i] * (1.0 - alphas[i]);
    }

    // Back-to-front sweep gives d(total)/d(alpha_i) without dividing by
    // transmittance (which can be exactly 0 behind saturated samples).
    double G = 0.0;  // adjoint of T_{i+1}
    std::vector<double> dsig(m, 0.0);
    for (size_t ii = m; ii-- > 0;) {
      const SampleFwd& sf = rf.samples[ii];
      const double dw = dI.dot(sf.color) + dM + dN.dot(sf.normal);
      const double da = (dw - G) * tprefix[ii];
      G = dw * alphas[ii] + G * (1.0 - alphas[ii]);
      dsig[ii] = da * ray.delta[ii] * (1.0 - alphas[ii]);
      dsig[ii] += d_sp + (sf.sigma > 1.0 ? d_max : 0.0);
    }

    for (size_t i = 0; i < m; ++i) {
      const int cb = rf.contrib_begin[i], ce = rf.contrib_begin[i + 1];
      if (cb == ce) continue;
      const SampleFwd& sf = rf.samples[i];
      const double t = ray.t[i], half = ray.delta[i] * 0.5;
      const Vec3 p = ray.o + t * ray.v;
      const double wgt_i = tprefix[i] * alphas[i];
      const Vec3 dc = dI * wgt_i;   // d(total)/d(sample color)
      const Vec3 dn = dN * wgt_i;   // d(total)/d(sample normal)

      const bool blended = sf.sigma > 1e-12;
      double dwsum = 0.0;
      dwblend.assign(ce - cb, 0.0);
      if (blended) {
        for (int j = cb; j < ce; ++j) {
          const Contrib& c = rf.contribs[j];
          double v = dc.dot(frames[c.frame].color);
          if (opt.use_normals) v += dn.dot(c.nhat);
          dwblend[j - cb] = v;
          dwsum += v * (frames[c.frame].alpha * c.s / sf.sigma);
        }
        // Lighting residual: added once per visible sample.
        if (rf.net_col[i] >= 0 && (dc.x() != 0.0 || dc.y() != 0.0 || dc.z() != 0.0)) {
          double* slot_dc = net_dc.data() + 3 * rf.net_col[i];
          slot_dc[0] += dc.x();
          slot_dc[1] += dc.y();
          slot_dc[2] += dc.z();
        }
      }

      for (int j = cb; j < ce; ++j) {
        const Contrib& c = rf.contribs[j];
        const PrimitiveFrame& pf = frames[c.frame];
        const PrimRayCtx& cx = rf.ctx[c.frame];
        const int k = slot[c.frame];
        double* gbase = grad->data() + pv.layout.primitive_offset(k);
        PrimGradSlots gs{gbase};

        const double u = pf.alpha * c.s;
        double du = dsig[i];
        if (blended) du += (dwblend[j - cb] - dwsum) / sf.sigma;
        du += d_ent * binary_entropy_clamped_grad(u);

        gbase[22] += du * c.s;         // transparency
        const double ds = du * pf.alpha;

        // Section density backward through the two boundary field values.
        const double fnear = merged_f_at(pf, cx, t - half);
        const double ffar = merged_f_at(pf, cx, t + half);
        double dfnear = 0.0, dffar = 0.0, dtheta = 0.0;
        density_backward(fnear, ffar, pf.theta_c, ray.delta[i], ds, &dfnear, &dffar, &dtheta);

        QuadricAdjoint adj_p, adj_n;
        MergedPointEval evn;
        evn.forward(pf, cx, ray.o + (t - half) * ray.v, t - half, false);
        dtheta += evn.backward_value(pf, dfnear, 0.0, &adj_p, &adj_n, nullptr, nullptr);
        MergedPointEval evf;
        evf.forward(pf, cx, ray.o + (t + half) * ray.v, t + half, false);
        dtheta += evf.backward_value(pf, dffar, 0.0, &adj_p, &adj_n, nullptr, nullptr);

        // Normal supervision path: blend backward at the sample center.
        if (opt.use_normals && blended && (dn.x() != 0.0 || dn.y() != 0.0 || dn.z() != 0.0)) {
          const double w = u / sf.sigma;
          const Vec3 dnhat = dn * w;
          MergedPointEval evc;
          evc.forward(pf, cx, p, t, true);
          NormalBlend nb;
          nb.forward(evc);
          Vec3 gbar_p = Vec3::Zero(), gbar_n = Vec3::Zero();
          double dpe = 0.0;
          nb.backward(evc, dnhat, &gbar_p, &gbar_n, &dpe);
          dtheta += evc.backward_value(pf, 0.0, dpe, &adj_p, &adj_n, &gbar_p,
                                       evc.nsq_on ? &gbar_n : nullptr);
        }

        if (blended) {
          const double w = u / sf.sigma;
          for (int ch = 0; ch < 3; ++ch) gbase[24 + ch] += dc[ch] * w;
        }
        if (theta_on[c.frame]) gbase[23] += dtheta;
        gs.add_quadric(0, adj_p);
        gs.add_quadric(11, adj_n);
      }
    }
  }

  lighting_backward_block(net, net_pts.data(), net_dc.data(), int(net_at.size()), gl);

  apply_squash_chain(pv, grad);
  for (int i = 0; i < int(grad->size()); ++i) {
    if (!std::isfinite((*grad)[i])) {
      throw std::runtime_error("non-finite gradient at " + pv.layout.describe(i));
    }
  }
  return out;
}

}  // namespace sqc
