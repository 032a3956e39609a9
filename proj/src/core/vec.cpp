#include "fqf/core/vec.hpp"

#include <algorithm>

namespace fqf {

Mat3 rotation_about(const Vec3& axis, double angle) {
  Vec3 u = normalized(axis);
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = c + u.x * u.x * t;
  r(0, 1) = u.x * u.y * t - u.z * s;
  r(0, 2) = u.x * u.z * t + u.y * s;
  r(1, 0) = u.y * u.x * t + u.z * s;
  r(1, 1) = c + u.y * u.y * t;
  r(1, 2) = u.y * u.z * t - u.x * s;
  r(2, 0) = u.z * u.x * t - u.y * s;
  r(2, 1) = u.z * u.y * t + u.x * s;
  r(2, 2) = c + u.z * u.z * t;
  return r;
}

double orthonormality_defect(const Mat3& r) {
  Mat3 g = r.transposed() * r;
  double worst = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int rr = 0; rr < 3; ++rr) {
      double target = (rr == c) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(g(rr, c) - target));
    }
  return worst;
}

}  // namespace fqf
