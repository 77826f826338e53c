#include "sqc/params.h"

#include <cmath>

namespace sqc {

double unsquash(double value, double lo, double hi) {
  const double p = (value - lo) / (hi - lo);
  if (p <= 0.0) return -kRawCap;
  if (p >= 1.0) return kRawCap;
  const double raw = std::log(p / (1.0 - p));
  if (raw > kRawCap) return kRawCap;
  if (raw < -kRawCap) return -kRawCap;
  return raw;
}

SlotMap primitive_slot_map(int slot) {
  using namespace ranges;
  const int s = slot < 22 ? slot % 11 : slot;  // quadric-local slot or tail
  switch (s) {
    case 0:
    case 1:
    case 2:
      return {kScaleLo, kScaleHi, true};
    case 3:
    case 4:
      return {kShapeLo, kShapeHi, true};
    case 5:
    case 6:
    case 7:
      return {kTransLo, kTransHi, true};
    case 8:
    case 9:
    case 10:
      return {0.0, 0.0, false};  // rotation: free angle
    default:
      return {kUnitLo, kUnitHi, true};  // alpha, theta, color
  }
}

std::string ParamLayout::describe(int flat) const {
  if (is_lighting(flat)) {
    int i = flat - lighting_offset();
    static const struct {
      const char* name;
      int count;
    } segs[] = {{"lighting.w1", kHidden * 3}, {"lighting.b1", kHidden},
                {"lighting.w2", kHidden * kHidden}, {"lighting.b2", kHidden},
                {"lighting.w3", kHidden * kHidden}, {"lighting.b3", kHidden},
                {"lighting.w4", 3 * kHidden}, {"lighting.b4", 3}};
    for (const auto& seg : segs) {
      if (i < seg.count) return std::string(seg.name) + "[" + std::to_string(i) + "]";
      i -= seg.count;
    }
    return "lighting.?";
  }
  const int k = flat / kPerPrimitive;
  const int slot = flat % kPerPrimitive;
  static const char* kNames[] = {
      "psq.scale.x", "psq.scale.y", "psq.scale.z", "psq.shape.e1", "psq.shape.e2",
      "psq.trans.x", "psq.trans.y", "psq.trans.z", "psq.rot.x",    "psq.rot.y",
      "psq.rot.z",   "nsq.scale.x", "nsq.scale.y", "nsq.scale.z",  "nsq.shape.e1",
      "nsq.shape.e2", "nsq.trans.x", "nsq.trans.y", "nsq.trans.z", "nsq.rot.x",
      "nsq.rot.y",   "nsq.rot.z",   "alpha",       "theta",        "color.r",
      "color.g",     "color.b"};
  return "prim[" + std::to_string(k) + "]." + kNames[slot];
}

double ParamVector::constrained(int flat) const {
  if (layout.is_lighting(flat)) return raw[flat];
  const SlotMap m = primitive_slot_map(flat % ParamLayout::kPerPrimitive);
  return m.squashed ? squash(raw[flat], m.lo, m.hi) : raw[flat];
}

namespace {

SuperquadricParams decode_quadric(const double* r) {
  using namespace ranges;
  SuperquadricParams q;
  for (int i = 0; i < 3; ++i) q.scale[i] = squash(r[i], kScaleLo, kScaleHi);
  for (int i = 0; i < 2; ++i) q.shape[i] = squash(r[3 + i], kShapeLo, kShapeHi);
  for (int i = 0; i < 3; ++i) q.translation[i] = squash(r[5 + i], kTransLo, kTransHi);
  for (int i = 0; i < 3; ++i) q.rotation[i] = r[8 + i];
  return q;
}

void encode_quadric(const SuperquadricParams& q, double* r) {
  using namespace ranges;
  for (int i = 0; i < 3; ++i) r[i] = unsquash(q.scale[i], kScaleLo, kScaleHi);
  for (int i = 0; i < 2; ++i) r[3 + i] = unsquash(q.shape[i], kShapeLo, kShapeHi);
  for (int i = 0; i < 3; ++i) r[5 + i] = unsquash(q.translation[i], kTransLo, kTransHi);
  for (int i = 0; i < 3; ++i) r[8 + i] = q.rotation[i];
}

}  // namespace

DualPrimitive ParamVector::primitive(int k) const {
  const double* r = raw.data() + layout.primitive_offset(k);
  DualPrimitive s;
  s.psq = decode_quadric(r);
  s.nsq = decode_quadric(r + 11);
  s.alpha = squash(r[22], 0.0, 1.0);
  s.theta = squash(r[23], 0.0, 1.0);
  for (int i = 0; i < 3; ++i) s.basic_color[i] = squash(r[24 + i], 0.0, 1.0);
  return s;
}

void ParamVector::set_primitive(int k, const DualPrimitive& s) {
  double* r = raw.data() + layout.primitive_offset(k);
  encode_quadric(s.psq, r);
  encode_quadric(s.nsq, r + 11);
  r[22] = unsquash(s.alpha, 0.0, 1.0);
  r[23] = unsquash(s.theta, 0.0, 1.0);
  for (int i = 0; i < 3; ++i) r[24 + i] = unsquash(s.basic_color[i], 0.0, 1.0);
}

void ParamVector::erase_primitive(int k) {
  const int off = layout.primitive_offset(k);
  raw.erase(raw.begin() + off, raw.begin() + off + ParamLayout::kPerPrimitive);
  layout.num_primitives -= 1;
}

void apply_squash_chain(const ParamVector& pv, std::vector<double>* grad) {
  const int prim_end = pv.layout.lighting_offset();
  for (int flat = 0; flat < prim_end; ++flat) {
    const SlotMap m = primitive_slot_map(flat % ParamLayout::kPerPrimitive);
    if (m.squashed) (*grad)[flat] *= dsquash(pv.raw[flat], m.lo, m.hi);
  }
}

}  // namespace sqc
