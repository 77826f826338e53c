#pragma once

#include <array>

#include "sqc/mathutil.h"

namespace sqc {

// Parameter ranges enforced everywhere a constrained value is produced.
namespace ranges {
constexpr double kScaleLo = 0.02, kScaleHi = 1.0;
constexpr double kShapeLo = 0.05, kShapeHi = 2.0;
constexpr double kTransLo = -1.0, kTransHi = 1.0;
constexpr double kUnitLo = 0.0, kUnitHi = 1.0;  // alpha, theta, color
}  // namespace ranges

// Sharpness floor applied at evaluation time only; stored theta may be lower.
constexpr double kThetaMin = 1e-3;

// One superquadric in constrained form. Rotation is stored as Euler angles in
// radians, applied in intrinsic Z*Y*X order (R = Rz * Ry * Rx); files carry
// degrees in [-180, 180).
struct SuperquadricParams {
  Vec3 scale{1.0, 1.0, 1.0};     // (a_x, a_y, a_z) in [0.02, 1.0]
  Vec2 shape{1.0, 1.0};          // (eps1, eps2) in [0.05, 2.0]
  Vec3 translation{0.0, 0.0, 0.0};
  Vec3 rotation{0.0, 0.0, 0.0};  // radians
};

// Positive/negative pair with shared transparency, sharpness and color.
struct DualPrimitive {
  SuperquadricParams psq;
  SuperquadricParams nsq;
  double alpha = 0.5;
  double theta = 0.1;
  Vec3 basic_color{0.5, 0.5, 0.5};

  double theta_eval() const { return theta < kThetaMin ? kThetaMin : theta; }
};

// Merged-field evaluation at one point.
struct IsfSample {
  double value = 0.0;       // f(p, S)
  Vec3 normal{0, 0, 1};     // unit blended normal
  double erase_prob = 0.0;  // P_E in [0, 1]
  Vec2 per_quadric{0, 0};   // (f_PSQ, f_NSQ)
};

Mat3 rotation_matrix(const Vec3& euler_rad);

// p' = R^-1 (p - T)
Vec3 to_local_frame(const Vec3& p, const SuperquadricParams& q);

// Inside-outside function: negative inside, 0 on the surface, positive
// outside, and >= -1 everywhere with equality only at the local origin.
// Absolute values are applied before the fractional exponentiations.
double isf_superquadric(const Vec3& p, const SuperquadricParams& q);

// Spatial gradient of isf_superquadric in world coordinates. At coordinate
// planes where a fractional power is singular the subterm derivative is 0.
Vec3 isf_gradient(const Vec3& p, const SuperquadricParams& q);

// Phi(-f_psq/theta - mu) * Phi(-f_nsq/theta - mu); Phi = logistic sigmoid.
double erase_probability(double f_psq, double f_nsq, double theta, double mu);

// Merged field f_psq*(1-P_E) - f_nsq*P_E, with the blended normal
// renormalized for reporting. Falls back to the PSQ-gradient direction when
// the blend cancels.
IsfSample merged_isf(const Vec3& p, const DualPrimitive& s, double mu);

}  // namespace sqc
