#pragma once

#include "t2kit/fixed.hpp"
#include "t2kit/linalg/lu.hpp"

#include <array>
#include <memory>

// The 2x2 family B(eps) = exp(-eps^-2) * (cos r, sin r; -sin r, cos r) with
// r = 1/eps, and B(0) = 0. Its entries shrink double-exponentially while the
// multiplier of any LU decomposition stays a tangent or cotangent of r, so
// the family exercises division at the edge of resolvability. recover_x
// inverts the multiplier through the case analysis fixed by the two
// permutations and clamps into [0,1].

namespace t2k::la {

/// eps = 1 / (2*k*pi + y) for k >= 1 and rational y in [0, 1].
inline IntervalReal rellich_eps(long k, const Rational& y) {
  if (k < 1) throw std::invalid_argument("rellich_eps: k < 1");
  if (y < 0 || y > 1) throw std::invalid_argument("rellich_eps: y outside [0,1]");
  return IntervalReal::from_fn([k, y](long m) {
    for (long q = m + 16;; q += q) {
      DyadicInterval pi = pi_enclosure(q);
      DyadicInterval den = DyadicInterval(Dyadic(2 * k), Dyadic(2 * k)) * pi +
                           DyadicInterval::of_rational(y, q);
      DyadicInterval r = di_div(DyadicInterval::point(Dyadic(1)), den, q);
      if (r.width() <= Dyadic(Int(1), -m)) return r;
    }
  });
}

/// Enough tolerance bits for an LU decomposition of B(1/(2k*pi+y)) to leave
/// `extra` meaningful bits above the entry scale exp(-r^2).
inline long rellich_tol_bits(long k, const Rational& y, long extra = 40) {
  Rational r_up = Rational(2 * k) * Rational(355, 113) + y + 1;
  Rational bits = r_up * r_up * Rational(14427, 10000);
  Int whole = numerator(bits) / denominator(bits) + 1;
  return static_cast<long>(whole) + extra;
}

namespace detail {

inline DyadicInterval pad_by(const DyadicInterval& iv, const Dyadic& rad) {
  return DyadicInterval(iv.lo - rad, iv.hi + rad);
}

// The common factors of all four entries at one refinement level: the scale
// exp(-r^2) and the rotation pair (sin r, cos r). Shared so that the four
// cells of one matrix pay for the series work once.
struct RellichScale {
  int kind = 0;               // 0: eps == 0, 1: sign of eps unresolved, 2: resolved
  Dyadic bound_hi;            // kind 1: upper bound on exp(-r^2) seen so far
  DyadicInterval om, si, ci;  // kind 2
  Dyadic rad;                 // kind 2: half-width of the angle enclosure
};

struct RellichCore {
  IntervalReal eps;
  std::mutex mu;
  std::map<long, RellichScale> memo;

  explicit RellichCore(IntervalReal e) : eps(std::move(e)) {}

  RellichScale scale(long q) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = memo.find(q);
    if (it != memo.end()) return it->second;
    RellichScale s;
    DyadicInterval E = eps.refine(q);
    if (E.hi.is_zero() || E.hi < Dyadic()) {
      s.kind = 0;  // eps in [0,1] forces eps = 0
    } else if (!(E.lo > Dyadic())) {
      s.kind = 1;
      Dyadic ih = fx::recip_dir(E.hi, q, true);  // a lower bound on 1/eps
      s.bound_hi = exp_neg_enclosure(ih * ih, q).hi;
    } else {
      s.kind = 2;
      DyadicInterval R = di_div(DyadicInterval::point(Dyadic(1)), E, q);
      DyadicInterval T = R * R;
      s.om = DyadicInterval(std::max(Dyadic(), exp_neg_enclosure(T.hi, q).lo),
                            exp_neg_enclosure(T.lo, q).hi)
                 .trimmed(q + 32);
      auto [si, ci] = sincos_enclosure(R.mid(), q);
      s.si = si.trimmed(q + 32);
      s.ci = ci.trimmed(q + 32);
      s.rad = half(R.width());
    }
    memo.emplace(q, s);
    return s;
  }
};

/// One entry of B(eps): sign * exp(-r^2) * (cos r or sin r).
inline DyadicInterval rellich_cell(const std::shared_ptr<RellichCore>& core, bool use_cos,
                                   bool negate, long m) {
  const Dyadic goal(Int(1), -m);
  const Dyadic half_goal(Int(1), -(m + 1));
  for (long q = std::max(m + 8, 16L);; q += q) {
    RellichScale s = core->scale(q);
    if (s.kind == 0) return DyadicInterval::point(Dyadic());
    if (s.kind == 1) {
      // Cannot separate eps from 0 yet; the scale alone may already decide.
      if (s.bound_hi <= half_goal) return DyadicInterval(-half_goal, half_goal);
      continue;
    }
    if (s.om.hi <= half_goal) return DyadicInterval(-half_goal, half_goal);
    DyadicInterval trig = pad_by(use_cos ? s.ci : s.si, s.rad);
    DyadicInterval v = (s.om * trig).trimmed(m + 48);
    if (negate) v = -v;
    if (v.width() <= goal) return v;
  }
}

}  // namespace detail

struct RellichMatrix {
  IntervalReal eps;
  std::array<std::array<IntervalReal, 2>, 2> cell;

  DyadicInterval value(long i, long j, long m) const { return cell[i][j].refine(m); }

  Mat as_mat() const {
    Mat A(2, 2);
    for (long i = 0; i < 2; ++i)
      for (long j = 0; j < 2; ++j) A.at(i, j) = cell[i][j];
    return A;
  }
};

inline RellichMatrix rellich_matrix(const IntervalReal& eps) {
  RellichMatrix B;
  B.eps = eps;
  if (eps.exact_tag() && *eps.exact_tag() == 0) {
    for (auto& row : B.cell)
      for (auto& c : row) c = IntervalReal::exact(Rational(0));
    return B;
  }
  auto core = std::make_shared<detail::RellichCore>(eps);
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j) {
      bool use_cos = i == j;
      bool negate = i == 1 && j == 0;
      B.cell[i][j] = IntervalReal::from_fn([core, use_cos, negate](long m) {
        return detail::rellich_cell(core, use_cos, negate, m);
      });
    }
  return B;
}

/// Evaluate B(eps) so that every entry is enclosed to width 2^-m.
inline RellichMatrix rellich(const IntervalReal& eps, long m) {
  RellichMatrix B = rellich_matrix(eps);
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j) B.cell[i][j].refine(m);
  return B;
}

/// Read x back from a decomposition of B(eps). The permutation pair decides
/// which of -tan r, cot r, -cot r, tan r the multiplier is; the matching
/// total inverse (arctan, or arccot = pi/2 - arctan) followed by the clamp
/// into [0,1] yields x.
inline IntervalReal recover_x(const RobustLU& lu) {
  if (lu.rows != 2 || lu.cols != 2)
    throw std::invalid_argument("recover_x: needs a 2x2 decomposition");
  if (!detail::is_perm(lu.P, 2) || !detail::is_perm(lu.Q, 2))
    throw std::invalid_argument("recover_x: invalid permutations");
  bool pswap = lu.P[0] == 1;
  bool qswap = lu.Q[0] == 1;
  Dyadic l21 = lu.L[1][0];
  if (!qswap) l21 = -l21;
  bool use_arccot = pswap != qswap;
  return IntervalReal::from_fn([l21, use_arccot](long m) {
    for (long b = m + 6;; b += b) {
      Dyadic t_lo = l21.trim_down(b);
      Dyadic t_hi = l21.trim_up(b);
      DyadicInterval a_lo = atan_enclosure(t_lo.to_rational(), b);
      DyadicInterval a_hi = atan_enclosure(t_hi.to_rational(), b);
      DyadicInterval a(std::min(a_lo.lo, a_hi.lo), std::max(a_lo.hi, a_hi.hi));
      DyadicInterval v = a;
      if (use_arccot) {
        DyadicInterval pih = pi_enclosure(b + 2);
        v = DyadicInterval(Dyadic(pih.lo.m, pih.lo.e - 1), Dyadic(pih.hi.m, pih.hi.e - 1)) - a;
      }
      auto clamp = [](const Dyadic& d) {
        if (d < Dyadic()) return Dyadic();
        if (d > Dyadic(1)) return Dyadic(1);
        return d;
      };
      v = DyadicInterval(clamp(v.lo), clamp(v.hi));
      if (v.width() <= Dyadic(Int(1), -m)) return v;
    }
  });
}

}  // namespace t2k::la
