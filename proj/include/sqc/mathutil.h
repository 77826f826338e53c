#pragma once

#include <cmath>
#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sqc {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)), overflow-safe.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

// Wrap degrees into [-180, 180).
inline double wrap_deg(double d) {
  double w = std::fmod(d + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

// |v|^e with the 0^0 = 1 convention of std::pow. Callers rely on exact
// results for e == 1 and e == 2 (pow is correctly rounded in glibc, but the
// fast paths also skip transcendental work on the common exponents).
inline double abs_pow(double m, double e) {
  if (e == 1.0) return m;
  if (e == 2.0) return m * m;
  if (e == 0.5) return std::sqrt(m);
  return std::pow(m, e);
}

}  // namespace sqc
