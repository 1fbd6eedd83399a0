#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "t2kit/rational.hpp"

// Certified enclosures of the handful of transcendental values the interval
// layer needs (pi, e, exp(-x), sin, cos, arctan). Everything is fixed-point
// series arithmetic on cpp_int mantissas with explicit error budgets; every
// public function re-checks the final width and retries at higher internal
// precision until the requested bound holds.

namespace t2k {
namespace fx {

// --- signed fixed-point series helpers (scale 2^-S) ---

// floor(a * num / den), num >= 0, den > 0, a signed; error in (-1, 0] ulp.
inline Int muldiv_floor(const Int& a, const Int& num, const Int& den) {
  Int p = a * num;
  Int q = p / den;
  if (q * den > p) q -= 1;
  return q;
}

struct SeriesResult {
  Int lo;        // scaled 2^-S lower bound of the sum
  Int err_ulps;  // sum lies in [lo, lo + err_ulps] * 2^-S
};

// exp(num/den) for num/den in [0, 1], scaled 2^-S. The fraction need not be
// in lowest terms.
inline SeriesResult exp_frac_series(const Int& num, const Int& den, long S) {
  Int t = pow2(S), sum = t;
  long count = 0;
  while (t != 0) {
    ++count;
    t = muldiv_floor(t, num, den * count);
    sum += t;
  }
  Int err = Int(count) * count + 2 * count + 8;
  return {sum, err};
}

inline SeriesResult exp_frac_series(const Rational& f, long S) {
  return exp_frac_series(numerator(f), denominator(f), S);
}

// sin/cos(num/den) for |num/den| <= 5, scaled 2^-S.
inline SeriesResult sin_series(const Int& num, const Int& den, long S) {
  Int n2 = num * num, d2 = den * den;
  // t_0 = mu: directed to <=1 ulp
  Int t = muldiv_floor(pow2(S), num >= 0 ? num : Int(-num), den);
  if (num < 0) t = -t;
  Int sum = t;
  long k = 0, count = 1;
  while (t != 0) {
    t = -muldiv_floor(t, n2, d2 * Int(2 * k + 2) * Int(2 * k + 3));
    sum += t;
    ++k;
    ++count;
    if (count > 100000) throw std::runtime_error("sin_series: no convergence");
  }
  Int err = 16 * (Int(count) * count + count + 4);
  return {sum - err, 2 * err};
}

inline SeriesResult sin_series(const Rational& mu, long S) {
  return sin_series(numerator(mu), denominator(mu), S);
}

inline SeriesResult cos_series(const Int& num, const Int& den, long S) {
  Int n2 = num * num, d2 = den * den;
  Int t = pow2(S), sum = t;
  long k = 0, count = 1;
  while (t != 0) {
    t = -muldiv_floor(t, n2, d2 * Int(2 * k + 1) * Int(2 * k + 2));
    sum += t;
    ++k;
    ++count;
    if (count > 100000) throw std::runtime_error("cos_series: no convergence");
  }
  Int err = 16 * (Int(count) * count + count + 4);
  return {sum - err, 2 * err};
}

inline SeriesResult cos_series(const Rational& mu, long S) {
  return cos_series(numerator(mu), denominator(mu), S);
}

// atan(u) for rational |u| <= 3/8, scaled 2^-S.
inline SeriesResult atan_small_series(const Rational& u, long S) {
  Int n2 = numerator(u) * numerator(u), d2 = denominator(u) * denominator(u);
  Int p = muldiv_floor(pow2(S), numerator(u) >= 0 ? numerator(u) : -numerator(u),
                       denominator(u));
  if (numerator(u) < 0) p = -p;
  Int sum = p;  // u^{2k+1} running power, then / (2k+1) when summed
  Int term = p;
  long k = 0, count = 1;
  while (term != 0) {
    p = -muldiv_floor(p, n2, d2);
    ++k;
    term = p / Int(2 * k + 1);
    sum += term;
    ++count;
    if (count > 100000) throw std::runtime_error("atan_series: no convergence");
  }
  Int err = 8 * (Int(count) * count + count + 4);
  return {sum - err, 2 * err};
}

inline DyadicInterval from_series(const SeriesResult& r, long S) {
  return DyadicInterval(Dyadic(r.lo, -S), Dyadic(r.lo + r.err_ulps, -S));
}

inline Dyadic dbl(const Dyadic& d) { return Dyadic(d.m, d.e + 1); }

// At tens of thousands of bits the raw series need thousands of terms, each
// a full-width muldiv. Halving the argument j times keeps the term count
// small; squaring (or double-angle) steps on intervals restore it without
// manual error bookkeeping.
constexpr long kHalvingCutoff = 2048;

// e^(num/den) for num/den in [0, 1], as an interval at ~rel_bits precision.
inline DyadicInterval exp_frac_interval(const Int& num, const Int& den, long rel_bits) {
  long j = rel_bits >= kHalvingCutoff ? 128 : 0;
  long Sj = rel_bits + j + 24;
  auto r = exp_frac_series(num, den << static_cast<unsigned>(j), Sj);
  DyadicInterval v = from_series(r, Sj);
  const long keep = Sj + 32;
  for (long i = 0; i < j; ++i)
    v = DyadicInterval((v.lo * v.lo).trim_down(keep), (v.hi * v.hi).trim_up(keep));
  return v;
}

inline DyadicInterval exp_frac_interval(const Rational& f, long rel_bits) {
  return exp_frac_interval(numerator(f), denominator(f), rel_bits);
}

// (sin mu, cos mu) for mu = num/den with |mu| <= 5, at scale ~2^-S.
inline std::pair<DyadicInterval, DyadicInterval> sincos_core(const Int& num,
                                                             const Int& den, long S) {
  long j = S >= kHalvingCutoff ? 128 : 0;
  long Sj = S + 2 * j + 24;
  Int denj = den << static_cast<unsigned>(j);
  DyadicInterval s = from_series(sin_series(num, denj, Sj), Sj);
  DyadicInterval c = from_series(cos_series(num, denj, Sj), Sj);
  const long keep = Sj + 32;
  for (long i = 0; i < j; ++i) {
    // sin 2a = 2 sin a cos a, cos 2a = 1 - 2 sin^2 a
    DyadicInterval sc = s * c;
    DyadicInterval ss = s * s;
    s = DyadicInterval(dbl(sc.lo).trim_down(keep), dbl(sc.hi).trim_up(keep));
    c = DyadicInterval((Dyadic(1) - dbl(ss.hi)).trim_down(keep),
                       (Dyadic(1) - dbl(ss.lo)).trim_up(keep));
  }
  return {s, c};
}

inline std::pair<DyadicInterval, DyadicInterval> sincos_core(const Rational& mu, long S) {
  return sincos_core(numerator(mu), denominator(mu), S);
}

// A dyadic split into integer part and fractional numerator/denominator.
struct DyadicParts {
  unsigned long whole = 0;
  Int num{0}, den{1};
};

inline DyadicParts split_frac(const Dyadic& x) {
  DyadicParts out;
  Dyadic fl = x.round_down(0);
  out.whole = Int(fl.m << static_cast<unsigned>(fl.e)).convert_to<unsigned long>();
  Dyadic f = x - fl;
  if (f.e >= 0) out.num = f.m << static_cast<unsigned>(f.e);
  else {
    out.num = f.m;
    out.den = pow2(-f.e);
  }
  return out;
}

}  // namespace fx

/// Enclosure of pi with width <= 2^-bits (Machin: pi = 16 atan(1/5) - 4 atan(1/239)).
inline DyadicInterval pi_enclosure(long bits) {
  static std::mutex mu;
  static std::map<long, DyadicInterval> cache;
  {
    std::scoped_lock lk(mu);
    auto it = cache.lower_bound(bits);
    if (it != cache.end()) return it->second;
  }
  long S = bits + 16;
  for (;;) {
    auto a5 = fx::atan_small_series(Rational(1, 5), S);
    auto a239 = fx::atan_small_series(Rational(1, 239), S);
    DyadicInterval v = DyadicInterval(Dyadic(16), Dyadic(16)) * fx::from_series(a5, S) -
                       DyadicInterval(Dyadic(4), Dyadic(4)) * fx::from_series(a239, S);
    if (v.width() <= Dyadic(Int(1), -bits)) {
      std::scoped_lock lk(mu);
      cache[bits] = v;
      return v;
    }
    S += S / 2 + 16;
  }
}

/// Enclosure of e with width <= 2^-bits.
inline DyadicInterval exp1_enclosure(long bits) {
  static std::mutex mu;
  static std::map<long, DyadicInterval> cache;
  {
    std::scoped_lock lk(mu);
    auto it = cache.lower_bound(bits);
    if (it != cache.end()) return it->second;
  }
  long S = bits + 16;
  for (;;) {
    auto r = fx::exp_frac_series(Rational(1), S);
    DyadicInterval v = fx::from_series(r, S);
    if (v.width() <= Dyadic(Int(1), -bits)) {
      std::scoped_lock lk(mu);
      cache[bits] = v;
      return v;
    }
    S += S / 2 + 16;
  }
}

namespace fx {

// Directed [1/d] with ~bits output grid; d > 0.
inline Dyadic recip_dir(const Dyadic& d, long bits, bool down) {
  if (d.m <= 0) throw std::domain_error("recip_dir: nonpositive");
  // 1/(m*2^e) = (2^K/m) * 2^{-K-e}
  long K = static_cast<long>(boost::multiprecision::msb(d.m)) + bits + 4;
  if (K < 4) K = 4;
  Int q = pow2(K) / d.m;
  if (!down && q * d.m < pow2(K)) q += 1;
  return Dyadic(q, -(K + d.e));
}

// Interval e^n for integer n >= 0 at ~rel_bits relative precision.
inline DyadicInterval exp_int_pow(unsigned long n, long rel_bits) {
  DyadicInterval e = exp1_enclosure(rel_bits + 16);
  DyadicInterval acc(Dyadic(1), Dyadic(1));
  DyadicInterval base = e;
  unsigned long k = n;
  while (k) {
    if (k & 1)
      acc = DyadicInterval((acc.lo * base.lo).trim_down(rel_bits + 32),
                           (acc.hi * base.hi).trim_up(rel_bits + 32));
    k >>= 1;
    if (k)
      base = DyadicInterval((base.lo * base.lo).trim_down(rel_bits + 32),
                            (base.hi * base.hi).trim_up(rel_bits + 32));
  }
  return acc;
}

}  // namespace fx

/// Enclosure of exp(-x) for rational x >= 0, width <= 2^-bits.
inline DyadicInterval exp_neg_enclosure(const Rational& x, long bits) {
  if (x < 0) throw std::domain_error("exp_neg_enclosure: x < 0");
  if (x == 0) return DyadicInterval(Dyadic(1), Dyadic(1));
  // If x >= (bits+2) ln2 then exp(-x) < 2^-(bits+2); 6932/10000 > ln 2.
  if (x >= Rational(6932 * (Int(bits) + 2), 10000))
    return DyadicInterval(Dyadic(0), Dyadic(Int(1), -(bits + 2)));
  Int n_int = numerator(x) / denominator(x);
  unsigned long n = n_int.convert_to<unsigned long>();
  Rational f = x - Rational(n_int);
  long rel = std::max<long>(64, bits + 8);
  for (;;) {
    DyadicInterval P = fx::exp_int_pow(n, rel);
    DyadicInterval Fi = fx::exp_frac_interval(f, rel + 16);
    DyadicInterval D(P.lo * Fi.lo, P.hi * Fi.hi);  // e^x, all positive
    Dyadic lo = fx::recip_dir(D.hi, bits + rel, true);
    Dyadic hi = fx::recip_dir(D.lo, bits + rel, false);
    DyadicInterval v(lo, hi);
    if (v.width() <= Dyadic(Int(1), -bits)) return v;
    rel += rel / 2 + 32;
  }
}

/// Enclosure of exp(-x) for dyadic x >= 0, width <= 2^-bits. Unlike the
/// rational version this one works at the relative precision the answer's
/// own magnitude calls for, which is what makes deep arguments affordable.
inline DyadicInterval exp_neg_enclosure(const Dyadic& x, long bits) {
  if (x < Dyadic()) throw std::domain_error("exp_neg_enclosure: x < 0");
  if (x.is_zero()) return DyadicInterval(Dyadic(1), Dyadic(1));
  // If x >= (bits+2) ln2 then exp(-x) < 2^-(bits+2); 6932/10000 > ln 2.
  if (x >= dyadic_above(Rational(6932 * (Int(bits) + 2), 10000), 16))
    return DyadicInterval(Dyadic(0), Dyadic(Int(1), -(bits + 2)));
  fx::DyadicParts parts = fx::split_frac(x);
  // The value sits near 2^-(x*log2 e); only the bits between there and the
  // target grid carry information. 14426/10000 < log2 e keeps the estimate
  // an underestimate, so the relative budget never comes up short.
  long drop =
      dyadic_div_updown(x * Dyadic(14426), Dyadic(10000), 0).first.m.convert_to<long>();
  long rel = std::max<long>(64, bits - drop + 32);
  for (;;) {
    DyadicInterval P = fx::exp_int_pow(parts.whole, rel);
    DyadicInterval Fi = fx::exp_frac_interval(parts.num, parts.den, rel + 16);
    DyadicInterval D(P.lo * Fi.lo, P.hi * Fi.hi);  // e^x, all positive
    Dyadic lo = fx::recip_dir(D.hi, bits + 8, true);
    Dyadic hi = fx::recip_dir(D.lo, bits + 8, false);
    DyadicInterval v(lo, hi);
    if (v.width() <= Dyadic(Int(1), -bits)) return v;
    rel += rel / 2 + 32;
  }
}

/// Enclosures of (sin r, cos r) for dyadic r, widths <= 2^-bits.
inline std::pair<DyadicInterval, DyadicInterval> sincos_enclosure(const Dyadic& r,
                                                                  long bits) {
  long rbits = 2;
  if (!r.is_zero()) rbits = std::max<long>(2, floor_log2_abs(r) + 2);
  long pb = bits + rbits + 24;
  // The series tail bound costs ~count^2 ulps, and count grows a little
  // faster than linearly in the scale; 40 guard bits cover any realistic
  // request, and the retry widens the scale too.
  long S = bits + 40;
  for (;;) {
    DyadicInterval pi2 = pi_enclosure(pb) + pi_enclosure(pb);  // 2*pi
    Dyadic mid2pi = pi2.mid();
    // q = nearest integer to r / 2pi
    Int q0 = dyadic_div_updown(r, mid2pi, 0).first.m;
    Int q = q0;
    bool found = false;
    const Dyadic seven_halves(Int(7), -1);
    for (Int cand = q0 - 2; cand <= q0 + 2; ++cand) {
      Dyadic diff = r - Dyadic(cand, 0) * mid2pi;
      if (diff.abs() <= seven_halves) {
        q = cand;
        found = true;
        break;
      }
    }
    if (!found) {
      pb += pb / 2 + 16;
      continue;
    }
    // rho = r - q * 2pi as an interval
    DyadicInterval qi = DyadicInterval::point(Dyadic(q, 0));
    DyadicInterval rho = DyadicInterval::point(r) - qi * pi2;
    Dyadic rad(rho.width().m, rho.width().e - 1);
    Dyadic mu = rho.mid();
    if (mu.abs() > Dyadic(5)) {
      pb += pb / 2 + 16;
      continue;  // reduction failed; retry sharper
    }
    Int mnum = mu.e >= 0 ? Int(mu.m << static_cast<unsigned>(mu.e)) : mu.m;
    Int mden = mu.e >= 0 ? Int(1) : pow2(-mu.e);
    auto [sraw, craw] = fx::sincos_core(mnum, mden, S);
    // |sin(x)-sin(mu)| <= |x-mu| and same for cos
    DyadicInterval pad(-rad, rad);
    DyadicInterval si = sraw + pad;
    DyadicInterval ci = craw + pad;
    if (si.width() <= Dyadic(Int(1), -bits) && ci.width() <= Dyadic(Int(1), -bits))
      return {si, ci};
    pb += pb / 2 + 16;
    S += S / 2 + 16;
  }
}

/// Enclosures of (sin r, cos r) for rational r, widths <= 2^-bits.
inline std::pair<DyadicInterval, DyadicInterval> sincos_enclosure(const Rational& r,
                                                                  long bits) {
  // Both functions are 1-Lipschitz, so a dyadic stand-in within 2^-(bits+8)
  // of r costs one pad on top of a slightly sharper dyadic enclosure.
  Dyadic x = dyadic_below(r, bits + 8);
  auto [s, c] = sincos_enclosure(x, bits + 4);
  Dyadic pd(Int(1), -(bits + 8));
  DyadicInterval pad(-pd, pd);
  return {s + pad, c + pad};
}

/// Enclosure of atan(t) for rational t, width <= 2^-bits.
inline DyadicInterval atan_enclosure(const Rational& t, long bits) {
  if (t < 0) {
    DyadicInterval v = atan_enclosure(-t, bits);
    return -v;
  }
  long S = bits + 16;
  for (;;) {
    DyadicInterval v;
    if (t <= Rational(3, 8)) {
      v = fx::from_series(fx::atan_small_series(t, S), S);
    } else if (t <= Rational(5, 2)) {
      // atan t = pi/4 + atan((t-1)/(t+1)), argument in [-3/8, 3/7]
      Rational u = (t - 1) / (t + 1);
      DyadicInterval pi4 = pi_enclosure(S);
      pi4 = DyadicInterval(Dyadic(pi4.lo.m, pi4.lo.e - 2), Dyadic(pi4.hi.m, pi4.hi.e - 2));
      v = pi4 + fx::from_series(fx::atan_small_series(u, S), S);
    } else {
      // atan t = pi/2 - atan(1/t)
      DyadicInterval pih = pi_enclosure(S);
      pih = DyadicInterval(Dyadic(pih.lo.m, pih.lo.e - 1), Dyadic(pih.hi.m, pih.hi.e - 1));
      v = pih - atan_enclosure(1 / t, bits + 2);
    }
    if (v.width() <= Dyadic(Int(1), -bits)) return v;
    S += S / 2 + 16;
  }
}

}  // namespace t2k
