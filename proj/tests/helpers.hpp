#pragma once

// Small constructors shared by the test binaries.

#include "gje/common.hpp"

namespace gje::testing {

inline Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

inline Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Box box1(double lo, double hi) {
  Box b;
  b.lo = v1(lo);
  b.hi = v1(hi);
  return b;
}

inline Box box2(double lo0, double lo1, double hi0, double hi1) {
  Box b;
  b.lo = v2(lo0, lo1);
  b.hi = v2(hi0, hi1);
  return b;
}

}  // namespace gje::testing
