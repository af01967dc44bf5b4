#include "qnmag/tensor2.hpp"

#include <algorithm>
#include <cmath>

namespace qnmag {

SymEigen2 eigen_sym(const Mat2& m) {
  const double a = m.xx;
  const double b = m.xy;
  const double d = m.yy;
  const double mean = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double radius = std::hypot(half_diff, b);

  SymEigen2 e;
  e.lo = mean - radius;
  e.hi = mean + radius;
  if (b == 0.0) {
    if (a <= d) {
      e.v_lo = {1.0, 0.0};
      e.v_hi = {0.0, 1.0};
    } else {
      e.v_lo = {0.0, 1.0};
      e.v_hi = {1.0, 0.0};
    }
    e.lo = std::min(a, d);
    e.hi = std::max(a, d);
    return e;
  }
  // Angle of the major axis; stable for any sign of half_diff.
  const double theta = 0.5 * std::atan2(b, half_diff);
  e.v_hi = {std::cos(theta), std::sin(theta)};
  e.v_lo = {-e.v_hi.y, e.v_hi.x};
  return e;
}

}  // namespace qnmag
