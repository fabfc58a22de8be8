#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace tekf {

inline constexpr double kPi = 3.14159265358979323846;

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// Planar rotation matrix R(psi).
inline Eigen::Matrix2d rot2(double psi) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

// 90-degree rotation generator; d/dpsi R(psi) = J * R(psi).
inline const Eigen::Matrix2d kJ = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

}  // namespace tekf
