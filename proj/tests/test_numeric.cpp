#include <catch2/catch_amalgamated.hpp>

#include <gmp.h>
#include <mpfr.h>

#include "t2kit/fixed.hpp"
#include "t2kit/nu_q.hpp"
#include "t2kit/prng.hpp"
#include "t2kit/rational.hpp"

using t2k::Dyadic;
using t2k::DyadicInterval;
using t2k::Int;
using t2k::Rational;

namespace {

// Reference values come from MPFR evaluated well past the precision under test.
constexpr mpfr_prec_t kOraclePrec = 4096;

void set_from_dyadic(mpfr_t out, const Dyadic& d) {
  mpz_t z;
  mpz_init_set_str(z, d.m.str().c_str(), 10);
  mpfr_set_z(out, z, MPFR_RNDN);
  mpfr_mul_2si(out, out, d.e, MPFR_RNDN);
  mpz_clear(z);
}

void set_from_rational(mpfr_t out, const Rational& q) {
  mpz_t n, d;
  mpz_init_set_str(n, numerator(q).str().c_str(), 10);
  mpz_init_set_str(d, denominator(q).str().c_str(), 10);
  mpfr_set_z(out, n, MPFR_RNDN);
  mpfr_t den;
  mpfr_init2(den, kOraclePrec);
  mpfr_set_z(den, d, MPFR_RNDN);
  mpfr_div(out, out, den, MPFR_RNDN);
  mpfr_clear(den);
  mpz_clear(n);
  mpz_clear(d);
}

bool encloses(const DyadicInterval& iv, mpfr_t value) {
  mpfr_t lo, hi;
  mpfr_init2(lo, kOraclePrec);
  mpfr_init2(hi, kOraclePrec);
  set_from_dyadic(lo, iv.lo);
  set_from_dyadic(hi, iv.hi);
  bool ok = mpfr_cmp(lo, value) <= 0 && mpfr_cmp(value, hi) <= 0;
  mpfr_clear(lo);
  mpfr_clear(hi);
  return ok;
}

bool width_at_most(const DyadicInterval& iv, long bits) {
  return iv.width() <= Dyadic(Int(1), -bits);
}

}  // namespace

TEST_CASE("dyadic arithmetic is exact") {
  Dyadic a(Int(3), -2);   // 3/4
  Dyadic b(Int(-5), -3);  // -5/8
  REQUIRE((a + b).to_rational() == Rational(1, 8));
  REQUIRE((a - b).to_rational() == Rational(11, 8));
  REQUIRE((a * b).to_rational() == Rational(-15, 32));
  REQUIRE(a > b);
  REQUIRE(Dyadic(Int(1), 3) == Dyadic(Int(8), 0));
  REQUIRE(Dyadic(Int(0), 5) == Dyadic(Int(0), -7));
  REQUIRE(Dyadic(Int(-1), 0) < Dyadic(Int(0), 0));
}

TEST_CASE("directed rounding to a grid") {
  Dyadic x(Int(5), -3);  // 5/8
  REQUIRE(x.round_down(1).to_rational() == Rational(1, 2));
  REQUIRE(x.round_up(1).to_rational() == Rational(1));
  REQUIRE(x.round_down(3).to_rational() == Rational(5, 8));
  Dyadic neg(Int(-5), -3);
  REQUIRE(neg.round_down(1).to_rational() == Rational(-1));
  REQUIRE(neg.round_up(1).to_rational() == Rational(-1, 2));

  REQUIRE(t2k::dyadic_below(Rational(1, 3), 10).to_rational() == Rational(341, 1024));
  REQUIRE(t2k::dyadic_above(Rational(1, 3), 10).to_rational() == Rational(342, 1024));
  REQUIRE(t2k::dyadic_below(Rational(-1, 3), 10).to_rational() == Rational(-342, 1024));
  REQUIRE(t2k::dyadic_above(Rational(-1, 3), 10).to_rational() == Rational(-341, 1024));
  REQUIRE(t2k::dyadic_below(Rational(3, 4), 2).to_rational() == Rational(3, 4));
  REQUIRE(t2k::dyadic_above(Rational(3, 4), 2).to_rational() == Rational(3, 4));
}

TEST_CASE("trimming keeps significant bits and direction") {
  Dyadic big(Int("123456789123456789"), -40);
  Dyadic down = big.trim_down(20);
  Dyadic up = big.trim_up(20);
  REQUIRE(down <= big);
  REQUIRE(big <= up);
  REQUIRE((up - down).to_rational() <= Rational(Int(1)) / (t2k::pow2(20) / 2) * big.to_rational());
}

TEST_CASE("floor_log2_abs brackets the magnitude") {
  REQUIRE(t2k::floor_log2_abs(Rational(1)) == 0);
  REQUIRE(t2k::floor_log2_abs(Rational(3, 2)) == 0);
  REQUIRE(t2k::floor_log2_abs(Rational(2)) == 1);
  REQUIRE(t2k::floor_log2_abs(Rational(1, 2)) == -1);
  REQUIRE(t2k::floor_log2_abs(Rational(5)) == 2);
  REQUIRE(t2k::floor_log2_abs(Rational(1, 5)) == -3);
  REQUIRE(t2k::floor_log2_abs(Rational(-7, 3)) == 1);
}

TEST_CASE("interval multiplication covers all sign mixes") {
  DyadicInterval a(Dyadic(Int(-3), -1), Dyadic(Int(1), -1));   // [-3/2, 1/2]
  DyadicInterval b(Dyadic(Int(-1), -2), Dyadic(Int(5), -2));   // [-1/4, 5/4]
  DyadicInterval p = a * b;
  for (Rational xa : {Rational(-3, 2), Rational(0), Rational(1, 2)})
    for (Rational xb : {Rational(-1, 4), Rational(1), Rational(5, 4)})
      REQUIRE(p.contains(xa * xb));
  REQUIRE(p.lo.to_rational() == Rational(-15, 8));
  REQUIRE(p.hi.to_rational() == Rational(5, 8));
}

TEST_CASE("interval division excludes zero divisors") {
  DyadicInterval num(Dyadic(Int(1), 0), Dyadic(Int(3), 0));
  DyadicInterval den(Dyadic(Int(1), -1), Dyadic(Int(2), 0));
  DyadicInterval q = t2k::di_div(num, den, 30);
  REQUIRE(q.contains(Rational(1, 2)));
  REQUIRE(q.contains(Rational(6)));
  REQUIRE(q.contains(Rational(2)));
  DyadicInterval bad(Dyadic(Int(-1), 0), Dyadic(Int(1), 0));
  REQUIRE_THROWS_AS(t2k::di_div(num, bad, 30), std::domain_error);
}

TEST_CASE("pi enclosure agrees with the oracle") {
  mpfr_t ref;
  mpfr_init2(ref, kOraclePrec);
  mpfr_const_pi(ref, MPFR_RNDN);
  for (long bits : {10L, 53L, 200L, 1000L}) {
    DyadicInterval v = t2k::pi_enclosure(bits);
    INFO("bits = " << bits);
    REQUIRE(width_at_most(v, bits));
    REQUIRE(encloses(v, ref));
  }
  mpfr_clear(ref);
}

TEST_CASE("exp enclosures agree with the oracle") {
  mpfr_t ref, x;
  mpfr_init2(ref, kOraclePrec);
  mpfr_init2(x, kOraclePrec);

  mpfr_set_ui(x, 1, MPFR_RNDN);
  mpfr_exp(ref, x, MPFR_RNDN);
  DyadicInterval e = t2k::exp1_enclosure(120);
  REQUIRE(width_at_most(e, 120));
  REQUIRE(encloses(e, ref));

  for (Rational arg : {Rational(0), Rational(1), Rational(1, 3), Rational(10),
                       Rational(100), Rational(47, 7), Rational(10000)}) {
    for (long bits : {24L, 80L}) {
      DyadicInterval v = t2k::exp_neg_enclosure(arg, bits);
      set_from_rational(x, arg);
      mpfr_neg(x, x, MPFR_RNDN);
      mpfr_exp(ref, x, MPFR_RNDN);
      INFO("exp(-" << numerator(arg) << "/" << denominator(arg) << ") at " << bits);
      REQUIRE(width_at_most(v, bits));
      REQUIRE(encloses(v, ref));
    }
  }
  mpfr_clear(ref);
  mpfr_clear(x);
}

TEST_CASE("sin and cos enclosures agree across argument reduction") {
  mpfr_t s, c, x;
  mpfr_init2(s, kOraclePrec);
  mpfr_init2(c, kOraclePrec);
  mpfr_init2(x, kOraclePrec);
  for (Rational arg :
       {Rational(0), Rational(1), Rational(-1), Rational(22, 7), Rational(355, 113),
        Rational(100), Rational(-1000, 7), Rational(1000000), Rational(3, 1024)}) {
    for (long bits : {30L, 90L}) {
      auto [si, ci] = t2k::sincos_enclosure(arg, bits);
      set_from_rational(x, arg);
      mpfr_sin(s, x, MPFR_RNDN);
      mpfr_cos(c, x, MPFR_RNDN);
      INFO("angle " << numerator(arg) << "/" << denominator(arg) << " at " << bits);
      REQUIRE(width_at_most(si, bits));
      REQUIRE(width_at_most(ci, bits));
      REQUIRE(encloses(si, s));
      REQUIRE(encloses(ci, c));
    }
  }
  mpfr_clear(s);
  mpfr_clear(c);
  mpfr_clear(x);
}

TEST_CASE("arctangent enclosure agrees on both identity branches") {
  mpfr_t ref, x;
  mpfr_init2(ref, kOraclePrec);
  mpfr_init2(x, kOraclePrec);
  for (Rational arg : {Rational(0), Rational(1, 7), Rational(3, 8), Rational(1, 2),
                       Rational(1), Rational(2), Rational(7), Rational(-5, 3),
                       Rational(1000), Rational(-19, 20)}) {
    for (long bits : {30L, 100L}) {
      DyadicInterval v = t2k::atan_enclosure(arg, bits);
      set_from_rational(x, arg);
      mpfr_atan(ref, x, MPFR_RNDN);
      INFO("atan " << numerator(arg) << "/" << denominator(arg) << " at " << bits);
      REQUIRE(width_at_most(v, bits));
      REQUIRE(encloses(v, ref));
    }
  }
  mpfr_clear(ref);
  mpfr_clear(x);
}

TEST_CASE("rational numbering round-trips") {
  REQUIRE(t2k::index_of(t2k::rational_enumeration(Int(17))) == 17);
  REQUIRE(t2k::rational_enumeration(t2k::index_of(Rational(2, 3))) == Rational(2, 3));
  for (long i = 0; i < 500; ++i) {
    Int idx(i);
    Rational q = t2k::rational_enumeration(idx);
    REQUIRE(t2k::index_of(q) == idx);
  }
  t2k::Prng rng(20260818);
  for (int trial = 0; trial < 200; ++trial) {
    Int num(static_cast<long>(rng.range(-999, 999)));
    Int den(static_cast<long>(rng.range(1, 999)));
    Rational q(num, den);
    REQUIRE(t2k::rational_enumeration(t2k::index_of(q)) == q);
  }
  // deep dyadic approximants stay feasible
  Rational deep(Int(4097301), t2k::pow2(23));
  REQUIRE(t2k::rational_enumeration(t2k::index_of(deep)) == deep);
}

TEST_CASE("first ten rationals are the expected distinct values") {
  std::vector<Rational> expect = {Rational(0),     Rational(1),      Rational(-1),
                                  Rational(2),     Rational(-2),     Rational(1, 2),
                                  Rational(-1, 2), Rational(1, 3),   Rational(-1, 3),
                                  Rational(3)};
  for (std::size_t i = 0; i < expect.size(); ++i)
    REQUIRE(t2k::rational_enumeration(Int(i)) == expect[i]);
}

TEST_CASE("prng streams are reproducible and fair-ish") {
  t2k::Prng a(42), b(42), c(43);
  std::vector<std::uint64_t> va, vb;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.next());
    vb.push_back(b.next());
  }
  REQUIRE(va == vb);
  REQUIRE(va[0] != c.next());
  int ones = 0;
  t2k::Prng d(7);
  for (int i = 0; i < 4000; ++i) ones += d.flip() ? 1 : 0;
  REQUIRE(ones > 1700);
  REQUIRE(ones < 2300);
  t2k::Prng e(9);
  for (int i = 0; i < 1000; ++i) {
    long v = e.range(-3, 5);
    REQUIRE(v >= -3);
    REQUIRE(v <= 5);
  }
}
