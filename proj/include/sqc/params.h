#pragma once

#include <string>
#include <vector>

#include "sqc/geometry.h"

namespace sqc {

// Bounded reparameterization: raw in R maps to (lo, hi). Saturated raws are
// representable (sigmoid underflows to exactly 0 or 1 in double precision).
inline double squash(double raw, double lo, double hi) {
  return lo + (hi - lo) * sigmoid(raw);
}

inline double dsquash(double raw, double lo, double hi) {
  const double s = sigmoid(raw);
  return (hi - lo) * s * (1.0 - s);
}

// Inverse of squash; values at or beyond the endpoints clamp to +-kRawCap so
// raws stay finite (constrained round-trip error there is below 1e-16).
constexpr double kRawCap = 36.75;
double unsquash(double value, double lo, double hi);

// Per-slot transform of the 27 raw slots of one primitive:
//  [0..2]  psq scale    [0.02, 1]
//  [3..4]  psq shape    [0.05, 2]
//  [5..7]  psq trans    [-1, 1]
//  [8..10] psq rotation (free, radians)
//  [11..21] nsq, same layout
//  [22]    alpha        [0, 1]
//  [23]    theta        [0, 1]
//  [24..26] color       [0, 1]
struct SlotMap {
  double lo = 0.0, hi = 1.0;
  bool squashed = true;
};

SlotMap primitive_slot_map(int slot);

struct ParamLayout {
  int num_primitives = 0;

  static constexpr int kPerPrimitive = 27;
  static constexpr int kHidden = 64;
  // 3->64->64->64->3 dense weights plus biases, flattened row-major.
  static constexpr int kLightingSize =
      kHidden * 3 + kHidden + kHidden * kHidden + kHidden + kHidden * kHidden + kHidden +
      3 * kHidden + 3;

  int size() const { return num_primitives * kPerPrimitive + kLightingSize; }
  int primitive_offset(int k) const { return k * kPerPrimitive; }
  int lighting_offset() const { return num_primitives * kPerPrimitive; }
  bool is_lighting(int flat) const { return flat >= lighting_offset(); }

  // Human-readable slot name for error reports.
  std::string describe(int flat) const;
};

// Flat raw parameter vector: primitives first, lighting weights last.
// Lighting weights are not squashed (raw == weight).
struct ParamVector {
  ParamLayout layout;
  std::vector<double> raw;

  static ParamVector zeros(int num_primitives) {
    ParamVector pv;
    pv.layout.num_primitives = num_primitives;
    pv.raw.assign(pv.layout.size(), 0.0);
    return pv;
  }

  int size() const { return layout.size(); }

  DualPrimitive primitive(int k) const;
  void set_primitive(int k, const DualPrimitive& s);

  // Constrained view of one raw slot.
  double constrained(int flat) const;

  // Removes one primitive block, preserving order of the rest.
  void erase_primitive(int k);
};

// Chain-rules a constrained-space gradient buffer into raw space, in place.
void apply_squash_chain(const ParamVector& pv, std::vector<double>* grad);

}  // namespace sqc
