#pragma once

#include "t2kit/linalg/interval_real.hpp"

// Total division for the normalized situation 0 <= x <= y. The quotient
// min{x,y}/y is approximated to 2^-n whenever y is at least 2^-n; for smaller
// y every answer in [0,1] is acceptable, and the clamp in the denominator
// makes the computation terminate and pins the fallback deterministically
// (exactly-zero inputs resolve to 0).

namespace t2k::la {

inline Dyadic rdiv_eps_value(const IntervalReal& x, const IntervalReal& y, long n) {
  if (n < 0) throw std::invalid_argument("rdiv_eps: negative precision");
  const Dyadic floor_clamp(Int(1), -(n + 1));
  const Dyadic goal(Int(1), -n);
  for (long m = n + 2;; m += m) {
    DyadicInterval X = x.refine(m);
    DyadicInterval Y = y.refine(m);
    DyadicInterval num(std::min(X.lo, Y.lo), std::min(X.hi, Y.hi));
    DyadicInterval den(std::max(Y.lo, floor_clamp), std::max(Y.hi, floor_clamp));
    DyadicInterval z = di_div(num, den, m);
    if (z.width() <= goal) {
      Dyadic v = z.mid();
      if (v < Dyadic()) v = Dyadic();
      if (v > Dyadic(1)) v = Dyadic(1);
      return v;
    }
  }
}

inline IntervalReal rdiv_eps(const IntervalReal& x, const IntervalReal& y, long n) {
  return IntervalReal::of_dyadic(rdiv_eps_value(x, y, n));
}

}  // namespace t2k::la
