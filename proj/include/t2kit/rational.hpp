#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace t2k {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Int pow2(long k) {
  if (k < 0) throw std::invalid_argument("pow2: negative exponent");
  return Int(1) << k;
}

struct Dyadic;
inline long floor_log2_abs(const Dyadic& d);

/// floor(log2(|q|)); q must be nonzero.
inline long floor_log2_abs(const Rational& q) {
  if (q == 0) throw std::invalid_argument("floor_log2_abs(0)");
  Int n = boost::multiprecision::abs(numerator(q));
  Int d = denominator(q);
  long bn = static_cast<long>(boost::multiprecision::msb(n));
  long bd = static_cast<long>(boost::multiprecision::msb(d));
  long g = bn - bd;  // 2^g <= |q| < 2^{g+2}
  // |q| >= 2^g iff n >= d << g (g >= 0) or n << -g >= d
  Int lhs = g >= 0 ? n : n << static_cast<unsigned>(-g);
  Int rhs = g >= 0 ? d << static_cast<unsigned>(g) : d;
  if (lhs >= rhs) {
    // check 2^{g+1}
    Int l2 = g + 1 >= 0 ? n : n << static_cast<unsigned>(-(g + 1));
    Int r2 = g + 1 >= 0 ? d << static_cast<unsigned>(g + 1) : d;
    return l2 >= r2 ? g + 1 : g;
  }
  return g - 1;
}

/// Exact dyadic number m * 2^e.
struct Dyadic {
  Int m;
  long e = 0;

  Dyadic() : m(0) {}
  Dyadic(long v) : m(v) {}
  Dyadic(Int mm, long ee) : m(std::move(mm)), e(ee) {
    if (m == 0) e = 0;
  }

  bool is_zero() const { return m == 0; }
  Dyadic operator-() const { return Dyadic(-m, e); }

  friend Dyadic operator+(const Dyadic& a, const Dyadic& b) {
    if (a.m == 0) return b;
    if (b.m == 0) return a;
    long e = std::min(a.e, b.e);
    return Dyadic((a.m << static_cast<unsigned>(a.e - e)) +
                      (b.m << static_cast<unsigned>(b.e - e)),
                  e);
  }
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b) {
    return Dyadic(a.m * b.m, a.e + b.e);
  }

  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    if (a.m == 0) {
      if (b.m == 0) return std::strong_ordering::equal;
      return b.m > 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    if (b.m == 0)
      return a.m > 0 ? std::strong_ordering::greater : std::strong_ordering::less;
    if (a.m.sign() != b.m.sign())
      return a.m < b.m ? std::strong_ordering::less : std::strong_ordering::greater;
    long e = std::min(a.e, b.e);
    Int am = a.m << static_cast<unsigned>(a.e - e);
    Int bm = b.m << static_cast<unsigned>(b.e - e);
    if (am < bm) return std::strong_ordering::less;
    if (am > bm) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  friend bool operator==(const Dyadic& a, const Dyadic& b) {
    return (a <=> b) == std::strong_ordering::equal;
  }

  Dyadic abs() const { return m < 0 ? -*this : *this; }

  Rational to_rational() const {
    if (m == 0) return Rational(0);
    if (e >= 0) return Rational(m << static_cast<unsigned>(e));
    // Hand the constructor coprime parts; gcd on raw wide mantissas is the
    // single most expensive thing the rational backend can do.
    long tz = static_cast<long>(
        boost::multiprecision::lsb(boost::multiprecision::abs(m)));
    long drop = std::min(tz, -e);
    return Rational(m >> static_cast<unsigned>(drop), pow2(-e - drop));
  }

  /// Sign of (*this - q), without building a rational.
  int cmp_rational(const Rational& q) const {
    Int lhs = m * denominator(q);
    Int rhs = numerator(q);
    if (e >= 0) lhs <<= static_cast<unsigned>(e);
    else rhs <<= static_cast<unsigned>(-e);
    return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
  }

  /// Nearest double, for display only.
  double to_double() const { return static_cast<double>(to_rational()); }

  std::string str() const {
    return m.str() + (e ? ("*2^" + std::to_string(e)) : "");
  }

  /// Largest dyadic with exponent >= -bits that is <= *this.
  Dyadic round_down(long bits) const {
    if (e >= -bits) return *this;
    unsigned s = static_cast<unsigned>(-bits - e);
    Int q = m >> s;  // arithmetic shift: floors for negatives
    return Dyadic(q, -bits);
  }
  /// Smallest dyadic with exponent >= -bits that is >= *this.
  Dyadic round_up(long bits) const {
    if (e >= -bits) return *this;
    unsigned s = static_cast<unsigned>(-bits - e);
    Int q = -((-m) >> s);
    return Dyadic(q, -bits);
  }

  /// Keep ~`bits` significant bits, rounding toward -inf / +inf.
  Dyadic trim_down(long bits) const {
    if (m == 0) return *this;
    long nb = static_cast<long>(boost::multiprecision::msb(boost::multiprecision::abs(m)));
    if (nb < bits) return *this;
    return round_down(-(e + nb - bits));
  }
  Dyadic trim_up(long bits) const {
    if (m == 0) return *this;
    long nb = static_cast<long>(boost::multiprecision::msb(boost::multiprecision::abs(m)));
    if (nb < bits) return *this;
    return round_up(-(e + nb - bits));
  }
};

inline long floor_log2_abs(const Dyadic& d) {
  if (d.is_zero()) throw std::invalid_argument("floor_log2_abs(0)");
  return static_cast<long>(
             boost::multiprecision::msb(boost::multiprecision::abs(d.m))) +
         d.e;
}

/// x/y rounded down and up to the grid 2^{-bits}; y must be nonzero.
inline std::pair<Dyadic, Dyadic> dyadic_div_updown(const Dyadic& x, const Dyadic& y,
                                                   long bits) {
  if (y.is_zero()) throw std::domain_error("dyadic_div_updown: zero divisor");
  Int a = x.m, d = y.m;
  if (d < 0) {
    a = -a;
    d = -d;
  }
  long s = bits + x.e - y.e;
  if (s >= 0) a <<= static_cast<unsigned>(s);
  else d <<= static_cast<unsigned>(-s);
  Int q, r;
  boost::multiprecision::divide_qr(a, d, q, r);
  if (r == 0) {
    Dyadic exact(q, -bits);
    return {exact, exact};
  }
  if (r < 0) q -= 1;
  return {Dyadic(q, -bits), Dyadic(q + 1, -bits)};
}

/// q rounded to the grid 2^{-bits}, toward -inf / +inf.
inline Dyadic dyadic_below(const Rational& q, long bits) {
  // floor(num * 2^bits / den), computed with nonnegative shifts only
  Int a = numerator(q), d = denominator(q);
  if (bits >= 0) a <<= static_cast<unsigned>(bits);
  else d <<= static_cast<unsigned>(-bits);
  Int fq = a / d;          // truncates toward zero
  if (fq * d > a) fq -= 1; // fix to floor for negatives
  return Dyadic(fq, -bits);
}

inline Dyadic dyadic_above(const Rational& q, long bits) {
  Dyadic lo = dyadic_below(q, bits);
  if (lo.cmp_rational(q) == 0) return lo;
  // lo.e may have been canonicalized to 0 when the floor was 0; step on the
  // requested grid, not on lo's stored exponent.
  return Dyadic(lo.m + 1, -bits);
}

/// Closed dyadic interval [lo, hi].
struct DyadicInterval {
  Dyadic lo, hi;

  DyadicInterval() = default;
  DyadicInterval(Dyadic l, Dyadic h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo > hi) throw std::logic_error("DyadicInterval: lo > hi");
  }
  static DyadicInterval point(Dyadic d) { return DyadicInterval(d, d); }
  static DyadicInterval of_rational(const Rational& q, long bits) {
    return DyadicInterval(dyadic_below(q, bits), dyadic_above(q, bits));
  }

  Dyadic width() const { return hi - lo; }
  Dyadic mid() const {
    Dyadic s = lo + hi;
    return Dyadic(s.m, s.e - 1);
  }
  /// max(|lo|,|hi|) — an upper bound for |x| over the interval.
  Dyadic mag() const { return std::max(lo.abs(), hi.abs()); }
  /// min |x| over the interval (0 if it straddles).
  Dyadic mig() const {
    if (straddles_zero()) return Dyadic();
    return std::min(lo.abs(), hi.abs());
  }
  bool straddles_zero() const { return lo <= Dyadic() && Dyadic() <= hi; }
  bool contains(const Rational& q) const {
    return lo.cmp_rational(q) <= 0 && hi.cmp_rational(q) >= 0;
  }

  friend DyadicInterval operator+(const DyadicInterval& a, const DyadicInterval& b) {
    return DyadicInterval(a.lo + b.lo, a.hi + b.hi);
  }
  friend DyadicInterval operator-(const DyadicInterval& a, const DyadicInterval& b) {
    return DyadicInterval(a.lo - b.hi, a.hi - b.lo);
  }
  DyadicInterval operator-() const { return DyadicInterval(-hi, -lo); }
  friend DyadicInterval operator*(const DyadicInterval& a, const DyadicInterval& b) {
    Dyadic p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return DyadicInterval(std::min(std::min(p1, p2), std::min(p3, p4)),
                          std::max(std::max(p1, p2), std::max(p3, p4)));
  }

  /// Outward-rounded to ~`bits` significant bits per endpoint.
  DyadicInterval trimmed(long bits) const {
    return DyadicInterval(lo.trim_down(bits), hi.trim_up(bits));
  }
};

/// a / b with b bounded away from zero; result endpoints on the 2^{-bits} grid,
/// rounded outward.
inline DyadicInterval di_div(const DyadicInterval& a, const DyadicInterval& b, long bits) {
  if (b.straddles_zero()) throw std::domain_error("di_div: denominator straddles zero");
  auto [lo, hi] = dyadic_div_updown(a.lo, b.lo, bits);
  for (const auto& [x, y] : {std::pair(a.lo, b.hi), std::pair(a.hi, b.lo),
                             std::pair(a.hi, b.hi)}) {
    auto [dn, up] = dyadic_div_updown(x, y, bits);
    if (dn < lo) lo = dn;
    if (up > hi) hi = up;
  }
  return DyadicInterval(lo, hi);
}

inline Rational clamp01(const Rational& q) {
  if (q < 0) return Rational(0);
  if (q > 1) return Rational(1);
  return q;
}

}  // namespace t2k
