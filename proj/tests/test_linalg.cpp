#include <catch2/catch_amalgamated.hpp>

#include <gmp.h>
#include <mpfr.h>

#include "t2kit/linalg/io.hpp"
#include "t2kit/linalg/lu.hpp"
#include "t2kit/linalg/rdiv.hpp"
#include "t2kit/linalg/rellich.hpp"
#include "t2kit/prng.hpp"

#include <algorithm>
#include <vector>

using t2k::Dyadic;
using t2k::DyadicInterval;
using t2k::Int;
using t2k::Rational;
namespace la = t2k::la;

namespace {

Rational rabs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

// ---------------------------------------------------------------------------
// Exact-fraction elimination, the reference the robust decompositions are
// measured against. Same tie-breaking as the implementations: row-major scan,
// strictly-larger magnitude wins.

struct RatLu {
  std::vector<long> P, Q;
  std::vector<std::vector<Rational>> L, U;
  long rank = 0;
  std::vector<Rational> pivots;
};

RatLu rat_lu_init(long r, long c) {
  RatLu o;
  o.P.resize(r);
  std::iota(o.P.begin(), o.P.end(), 0L);
  o.Q.resize(c);
  std::iota(o.Q.begin(), o.Q.end(), 0L);
  o.L.assign(r, std::vector<Rational>(r, Rational(0)));
  for (long i = 0; i < r; ++i) o.L[i][i] = 1;
  return o;
}

void rat_swap_rows(RatLu& o, std::vector<std::vector<Rational>>& M, long k, long pi) {
  if (pi == k) return;
  std::swap(M[k], M[pi]);
  std::swap(o.P[k], o.P[pi]);
  for (long j = 0; j < k; ++j) std::swap(o.L[k][j], o.L[pi][j]);
}

void rat_eliminate(RatLu& o, std::vector<std::vector<Rational>>& M, long k) {
  long r = static_cast<long>(M.size());
  long c = static_cast<long>(M[k].size());
  for (long i = k + 1; i < r; ++i) {
    Rational m = M[i][k] / M[k][k];
    o.L[i][k] = m;
    for (long j = k; j < c; ++j) M[i][j] -= m * M[k][j];
  }
  o.pivots.push_back(M[k][k]);
  ++o.rank;
}

RatLu rat_full_pivot(std::vector<std::vector<Rational>> M) {
  long r = static_cast<long>(M.size());
  long c = static_cast<long>(M[0].size());
  RatLu o = rat_lu_init(r, c);
  for (long k = 0; k < std::min(r, c); ++k) {
    long pi = k, pj = k;
    Rational best = -1;
    for (long i = k; i < r; ++i)
      for (long j = k; j < c; ++j)
        if (rabs(M[i][j]) > best) {
          best = rabs(M[i][j]);
          pi = i;
          pj = j;
        }
    if (best == 0) break;
    rat_swap_rows(o, M, k, pi);
    if (pj != k) {
      for (long i = 0; i < r; ++i) std::swap(M[i][k], M[i][pj]);
      std::swap(o.Q[k], o.Q[pj]);
    }
    rat_eliminate(o, M, k);
  }
  o.U = std::move(M);
  return o;
}

RatLu rat_col_pivot(std::vector<std::vector<Rational>> M) {
  long r = static_cast<long>(M.size());
  long c = static_cast<long>(M[0].size());
  RatLu o = rat_lu_init(r, c);
  long k = 0, stuck = 0;
  while (k < std::min(r, c) && stuck < c - k) {
    long pi = k;
    Rational best = -1;
    for (long i = k; i < r; ++i)
      if (rabs(M[i][k]) > best) {
        best = rabs(M[i][k]);
        pi = i;
      }
    if (best == 0) {
      for (long i = 0; i < r; ++i)
        std::rotate(M[i].begin() + k, M[i].begin() + k + 1, M[i].end());
      std::rotate(o.Q.begin() + k, o.Q.begin() + k + 1, o.Q.end());
      ++stuck;
      continue;
    }
    stuck = 0;
    rat_swap_rows(o, M, k, pi);
    rat_eliminate(o, M, k);
    ++k;
  }
  o.U = std::move(M);
  return o;
}

// ---------------------------------------------------------------------------
// MPFR references for the transcendental checks.

constexpr mpfr_prec_t kOraclePrec = 2048;

void set_from_dyadic(mpfr_t out, const Dyadic& d) {
  mpz_t z;
  mpz_init_set_str(z, d.m.str().c_str(), 10);
  mpfr_set_z(out, z, MPFR_RNDN);
  mpfr_mul_2si(out, out, d.e, MPFR_RNDN);
  mpz_clear(z);
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

// |mid(iv) - value| <= 2^-bits
bool mid_close(const DyadicInterval& iv, mpfr_t value, long bits) {
  mpfr_t mid, diff;
  mpfr_init2(mid, kOraclePrec);
  mpfr_init2(diff, kOraclePrec);
  set_from_dyadic(mid, iv.mid());
  mpfr_sub(diff, mid, value, MPFR_RNDN);
  mpfr_abs(diff, diff, MPFR_RNDN);
  mpfr_t tol;
  mpfr_init2(tol, 64);
  mpfr_set_ui_2exp(tol, 1, -bits, MPFR_RNDN);
  bool ok = mpfr_cmp(diff, tol) <= 0;
  mpfr_clear(mid);
  mpfr_clear(diff);
  mpfr_clear(tol);
  return ok;
}

// ---------------------------------------------------------------------------
// Seeded corpus.

Rational rand_entry(t2k::Prng& g) {
  long num = g.range(-99, 99);
  long den = g.range(1, 64);
  return Rational(num, den);
}

std::vector<std::vector<Rational>> rand_mat(t2k::Prng& g, long n) {
  std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n));
  for (auto& row : m)
    for (auto& x : row) x = rand_entry(g);
  return m;
}

std::vector<std::vector<Rational>> zero_mat(long n) {
  return std::vector<std::vector<Rational>>(n, std::vector<Rational>(n, Rational(0)));
}

std::vector<std::vector<Rational>> corpus_case(t2k::Prng& g, long idx, long n) {
  auto m = rand_mat(g, n);
  switch (idx % 8) {
    case 1:  // dependent row
      for (long j = 0; j < n; ++j) m[n - 1][j] = m[0][j] + m[1][j];
      break;
    case 2:  // zero column
      for (long i = 0; i < n; ++i) m[i][n / 2] = 0;
      break;
    case 3:  // zero row
      for (long j = 0; j < n; ++j) m[n / 2][j] = 0;
      break;
    case 4:  // duplicate columns
      for (long i = 0; i < n; ++i) m[i][n - 1] = m[i][0];
      break;
    case 5: {  // rank one
      std::vector<Rational> u(n), v(n);
      for (auto& x : u) x = rand_entry(g);
      for (auto& x : v) x = rand_entry(g);
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) m[i][j] = u[i] * v[j];
      break;
    }
    case 6:  // scaled far below the certificate
      for (auto& row : m)
        for (auto& x : row) x /= Rational(t2k::pow2(40));
      break;
    case 7:  // sign pattern only
      for (auto& row : m)
        for (auto& x : row) x = Rational(x > 0 ? 1 : (x < 0 ? -1 : 0));
      break;
    default:
      break;
  }
  return m;
}

bool oracle_gated(const RatLu& o, long tol_bits) {
  Rational gate(1, t2k::pow2(tol_bits - 4));
  for (const auto& p : o.pivots)
    if (rabs(p) <= gate) return false;
  return true;
}

}  // namespace

TEST_CASE("refinement intervals nest and honor exact tags") {
  la::IntervalReal x = la::IntervalReal::exact(Rational(1, 3));
  DyadicInterval coarse = x.refine(10);
  DyadicInterval fine = x.refine(40);
  REQUIRE(coarse.width() <= Dyadic(Int(1), -10));
  REQUIRE(fine.width() <= Dyadic(Int(1), -40));
  REQUIRE(coarse.contains(Rational(1, 3)));
  REQUIRE(fine.contains(Rational(1, 3)));
  REQUIRE(coarse.lo <= fine.lo);
  REQUIRE(fine.hi <= coarse.hi);

  // Out-of-order queries still nest because enclosures are intersected.
  la::IntervalReal y = la::IntervalReal::from_fn(
      [](long m) { return DyadicInterval::of_rational(Rational(2, 7), m + 1); });
  DyadicInterval deep = y.refine(50);
  DyadicInterval shallow = y.refine(5);
  REQUIRE(shallow.lo >= deep.lo);
  REQUIRE(shallow.hi <= deep.hi);
  REQUIRE(!y.exact_tag());

  REQUIRE(*x.exact_tag() == Rational(1, 3));
  REQUIRE(la::IntervalReal::of_dyadic(Dyadic(Int(5), -3)).refine(60).mid().to_rational() ==
          Rational(5, 8));
}

TEST_CASE("division meets the forced accuracy contract") {
  Dyadic z = la::rdiv_eps_value(la::IntervalReal::exact(Rational(1)),
                                la::IntervalReal::exact(Rational(2)), 20);
  REQUIRE(rabs(z.to_rational() - Rational(1, 2)) <= Rational(1, t2k::pow2(20)));

  Dyadic zero = la::rdiv_eps_value(la::IntervalReal::exact(Rational(3, 10)),
                                   la::IntervalReal::exact(Rational(0)), 20);
  REQUIRE(zero.is_zero());

  // Degenerate denominators still produce a value in [0,1].
  for (long i = 0; i < 8; ++i) {
    Dyadic v = la::rdiv_eps_value(la::IntervalReal::exact(Rational(i, 7)),
                                  la::IntervalReal::exact(Rational(1, t2k::pow2(30))), 10);
    REQUIRE(v >= Dyadic());
    REQUIRE(v <= Dyadic(1));
  }

  la::IntervalReal wrapped = la::rdiv_eps(la::IntervalReal::exact(Rational(1)),
                                          la::IntervalReal::exact(Rational(3)), 25);
  REQUIRE(wrapped.refine(25).contains(*wrapped.exact_tag()));
  REQUIRE(rabs(*wrapped.exact_tag() - Rational(1, 3)) <= Rational(1, t2k::pow2(25)));
}

TEST_CASE("division tracks the exact quotient across a seeded corpus") {
  t2k::Prng g(0x5eed001);
  const long precisions[] = {10, 20, 40};
  for (long t = 0; t < 10000; ++t) {
    long n = precisions[t % 3];
    Rational y(g.range(1, 1 << 20), g.range(1, 1 << 20));
    if (y < Rational(1, t2k::pow2(n))) {
      y = Rational(1, t2k::pow2(n)) + y;
    }
    long d = g.range(1, 1 << 16);
    Rational x = y * Rational(g.range(0, d), d);
    Dyadic z = la::rdiv_eps_value(la::IntervalReal::exact(x), la::IntervalReal::exact(y), n);
    REQUIRE(rabs(z.to_rational() - x / y) <= Rational(1, t2k::pow2(n)));
  }
}

TEST_CASE("pivot selection reports index, sign, and a maximum certificate") {
  std::vector<la::IntervalReal> exact = {la::IntervalReal::exact(Rational(3)),
                                         la::IntervalReal::exact(Rational(1)),
                                         la::IntervalReal::exact(Rational(-5))};
  la::PivotChoice pc = la::pivot_select(exact, 10);
  REQUIRE(pc.index == 2);
  REQUIRE(pc.sign == -1);
  REQUIRE(!pc.straddle);
  REQUIRE(pc.certificate.is_zero());

  std::vector<la::IntervalReal> zeros(3, la::IntervalReal::exact(Rational(0)));
  pc = la::pivot_select(zeros, 10);
  REQUIRE(pc.index == 0);
  REQUIRE(pc.straddle);
  REQUIRE(pc.sign == 0);
  REQUIRE(pc.certificate.is_zero());

  // Near-tie seen only through width-2^-m enclosures: either choice is fine,
  // but the certificate must cover the gap to the true maximum.
  auto blurry = [](const Rational& v) {
    return la::IntervalReal::from_fn([v](long m) {
      return DyadicInterval(t2k::dyadic_below(v - Rational(1, t2k::pow2(m + 2)), m + 3),
                            t2k::dyadic_above(v + Rational(1, t2k::pow2(m + 2)), m + 3));
    });
  };
  std::vector<Rational> truth = {Rational(1), Rational(1) - Rational(1, t2k::pow2(50))};
  std::vector<la::IntervalReal> ties = {blurry(truth[0]), blurry(truth[1])};
  pc = la::pivot_select(ties, 10);
  REQUIRE(pc.certificate <= Dyadic(Int(1), -9));  // 2 * 2^-10
  Rational chosen = truth[static_cast<size_t>(pc.index)];
  REQUIRE(Rational(1) - chosen <= pc.certificate.to_rational());
}

TEST_CASE("full pivoting on the identity and the zero matrix") {
  la::Mat I3 = la::mat_from_rationals(
      {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  la::RobustLU lu = la::lu_decomp_pq(I3, 20);
  REQUIRE(lu.P == std::vector<long>({0, 1, 2}));
  REQUIRE(lu.Q == std::vector<long>({0, 1, 2}));
  for (long i = 0; i < 3; ++i)
    for (long j = 0; j < 3; ++j) {
      REQUIRE(lu.L[i][j] == Dyadic(i == j ? 1 : 0));
      REQUIRE(lu.U[i][j] == Dyadic(i == j ? 1 : 0));
    }
  la::LuReport rep = la::validate_lu(I3, lu, 20);
  REQUIRE(rep.pass);
  REQUIRE(rep.residual.is_zero());

  la::Mat Z = la::mat_from_rationals(zero_mat(4));
  lu = la::lu_decomp_pq(Z, 20);
  REQUIRE(lu.pivot_rounds == 0);
  for (long i = 0; i < 4; ++i)
    for (long j = 0; j < 4; ++j) {
      REQUIRE(lu.L[i][j] == Dyadic(i == j ? 1 : 0));
      REQUIRE(lu.U[i][j].is_zero());
    }
  rep = la::validate_lu(Z, lu, 20);
  REQUIRE(rep.pass);
  REQUIRE(rep.residual.is_zero());
}

TEST_CASE("full pivoting matches exact elimination on a seeded corpus") {
  t2k::Prng g(0x17a9);
  const long tol = 20;
  long gated_checked = 0;
  for (long t = 0; t < 250; ++t) {
    long n = t < 200 ? 4 : 8;
    auto m = corpus_case(g, t, n);
    la::Mat A = la::mat_from_rationals(m);
    la::RobustLU lu = la::lu_decomp_pq(A, tol);
    la::LuReport rep = la::validate_lu(A, lu, tol);
    REQUIRE(rep.pass);
    REQUIRE(rep.residual <= Dyadic(Int(1), -tol));
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < i; ++j) REQUIRE(lu.L[i][j].abs() <= Dyadic(1));
    RatLu o = rat_full_pivot(m);
    if (oracle_gated(o, tol)) {
      ++gated_checked;
      REQUIRE(lu.pivot_rounds == o.rank);
      for (long i = 0; i < n; ++i) REQUIRE(rep.profile[i] == (i < o.rank ? i : -1));
    }
  }
  REQUIRE(gated_checked >= 150);
}

TEST_CASE("column pivoting records row swaps and column skips") {
  la::Mat A = la::mat_from_rationals({{0, 1}, {1, 0}});
  la::RobustLU lu = la::lu_decomp_q(A, 20);
  REQUIRE(lu.P == std::vector<long>({1, 0}));
  REQUIRE(lu.Q == std::vector<long>({0, 1}));
  REQUIRE(lu.pivot_rounds == 2);
  la::LuReport rep = la::validate_lu(A, lu, 20);
  REQUIRE(rep.pass);
  REQUIRE(rep.residual.is_zero());

  la::Mat B = la::mat_from_rationals({{0, 2}, {0, 3}});
  lu = la::lu_decomp_q(B, 20);
  REQUIRE(lu.Q == std::vector<long>({1, 0}));  // the zero column went behind
  REQUIRE(lu.P == std::vector<long>({1, 0}));
  REQUIRE(lu.pivot_rounds == 1);
  rep = la::validate_lu(B, lu, 20);
  REQUIRE(rep.pass);

  la::Mat C = la::mat_from_rationals(zero_mat(3));
  lu = la::lu_decomp_q(C, 20);
  REQUIRE(lu.pivot_rounds == 0);
  REQUIRE(la::validate_lu(C, lu, 20).pass);
}

TEST_CASE("column pivoting matches exact elimination on a seeded corpus") {
  t2k::Prng g(0xc01a);
  const long tol = 20;
  long gated_checked = 0;
  for (long t = 0; t < 250; ++t) {
    long n = t < 200 ? 4 : 8;
    auto m = corpus_case(g, t, n);
    la::Mat A = la::mat_from_rationals(m);
    la::RobustLU lu = la::lu_decomp_q(A, tol);
    la::LuReport rep = la::validate_lu(A, lu, tol);
    REQUIRE(rep.perms_ok);
    REQUIRE(rep.unit_diag_ok);
    REQUIRE(rep.lower_bound_ok);
    REQUIRE(rep.residual_ok);
    RatLu o = rat_col_pivot(m);
    if (oracle_gated(o, tol)) {
      ++gated_checked;
      REQUIRE(rep.pass);
      REQUIRE(lu.pivot_rounds == o.rank);
      for (long i = 0; i < n; ++i) REQUIRE(rep.profile[i] == (i < o.rank ? i : -1));
    }
  }
  REQUIRE(gated_checked >= 150);
}

TEST_CASE("decompositions are deterministic") {
  t2k::Prng g(0xdede);
  auto m = rand_mat(g, 5);
  la::Mat A = la::mat_from_rationals(m);
  std::string a = la::lu_to_json(la::lu_decomp_pq(A, 24)).dump();
  la::Mat A2 = la::mat_from_rationals(m);
  std::string b = la::lu_to_json(la::lu_decomp_pq(A2, 24)).dump();
  REQUIRE(a == b);
  std::string c = la::lu_to_json(la::lu_decomp_q(A, 24)).dump();
  std::string d = la::lu_to_json(la::lu_decomp_q(A2, 24)).dump();
  REQUIRE(c == d);
}

TEST_CASE("validation rejects corrupted decompositions") {
  la::Mat A = la::mat_from_rationals({{2, 1, 0}, {1, 3, 1}, {0, 1, 4}});
  la::RobustLU good = la::lu_decomp_pq(A, 20);
  REQUIRE(la::validate_lu(A, good, 20).pass);

  la::RobustLU bad = good;
  bad.L[1][1] = Dyadic(2);
  la::LuReport rep = la::validate_lu(A, bad, 20);
  REQUIRE(!rep.unit_diag_ok);
  REQUIRE(!rep.pass);

  bad = good;
  bad.L[2][0] = Dyadic(Int(3), -1);  // 3/2 breaks the multiplier bound
  rep = la::validate_lu(A, bad, 20);
  REQUIRE(!rep.lower_bound_ok);

  bad = good;
  bad.P = {0, 0, 2};
  rep = la::validate_lu(A, bad, 20);
  REQUIRE(!rep.perms_ok);

  bad = good;
  bad.U[0][1] = bad.U[0][1] + Dyadic(Int(1), -5);
  rep = la::validate_lu(A, bad, 20);
  REQUIRE(!rep.residual_ok);
  REQUIRE(rep.residual >= Dyadic(Int(1), -6));

  bad = good;
  bad.U[2][0] = Dyadic(Int(1), -2);  // junk far above the certificate
  rep = la::validate_lu(A, bad, 20);
  REQUIRE(!rep.echelon_ok);

  la::Mat wrong(2, 2);
  REQUIRE_THROWS_AS(la::validate_lu(wrong, good, 20), std::invalid_argument);
}

TEST_CASE("block diagonal input splits into two valid decompositions") {
  la::Mat A = la::mat_from_rationals({{1, 2, 0, 0},
                                      {3, 4, 0, 0},
                                      {0, 0, 5, 6},
                                      {0, 0, 7, 1}});
  la::RobustLU lu = la::lu_decomp_pq(A, 20);
  la::LuReport rep = la::validate_lu(A, lu, 20);
  REQUIRE(rep.pass);
  REQUIRE(rep.split == 2);
  REQUIRE(rep.blocks.size() == 2);
  REQUIRE(rep.blocks[0].pass);
  REQUIRE(rep.blocks[1].pass);

  la::RobustLU qlu = la::lu_decomp_q(A, 20);
  la::LuReport qrep = la::validate_lu(A, qlu, 20);
  REQUIRE(qrep.split == 2);
  REQUIRE(qrep.blocks.size() == 2);
  REQUIRE(qrep.blocks[0].pass);
  REQUIRE(qrep.blocks[1].pass);
}

TEST_CASE("stress family evaluates to the advertised entries") {
  la::RellichMatrix Z = la::rellich(la::IntervalReal::exact(Rational(0)), 20);
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j) {
      DyadicInterval v = Z.value(i, j, 20);
      REQUIRE(v.lo.is_zero());
      REQUIRE(v.hi.is_zero());
    }

  // eps = 1/2: scale exp(-4), angle 2.
  la::RellichMatrix B = la::rellich(la::IntervalReal::exact(Rational(1, 2)), 40);
  mpfr_t want, tmp;
  mpfr_init2(want, kOraclePrec);
  mpfr_init2(tmp, kOraclePrec);

  mpfr_set_si(want, -4, MPFR_RNDN);
  mpfr_exp(want, want, MPFR_RNDN);  // e^-4
  mpfr_set_ui(tmp, 2, MPFR_RNDN);
  mpfr_cos(tmp, tmp, MPFR_RNDN);
  mpfr_mul(tmp, tmp, want, MPFR_RNDN);  // e^-4 cos 2
  REQUIRE(encloses(B.value(0, 0, 40), tmp));
  REQUIRE(encloses(B.value(1, 1, 40), tmp));

  mpfr_set_ui(tmp, 2, MPFR_RNDN);
  mpfr_sin(tmp, tmp, MPFR_RNDN);
  mpfr_mul(tmp, tmp, want, MPFR_RNDN);  // e^-4 sin 2
  REQUIRE(encloses(B.value(0, 1, 40), tmp));
  mpfr_neg(tmp, tmp, MPFR_RNDN);
  REQUIRE(encloses(B.value(1, 0, 40), tmp));

  // Column magnitude: c00^2 + c10^2 = exp(-8).
  DyadicInterval col = B.value(0, 0, 40) * B.value(0, 0, 40) +
                       B.value(1, 0, 40) * B.value(1, 0, 40);
  mpfr_set_si(want, -8, MPFR_RNDN);
  mpfr_exp(want, want, MPFR_RNDN);
  REQUIRE(encloses(col, want));
  REQUIRE(mid_close(col, want, 35));

  mpfr_clear(want);
  mpfr_clear(tmp);
}

TEST_CASE("multiplier inversion follows the permutation case table") {
  // Matrices shaped like the stress family with the big entry steered into
  // each of the four pivot positions. The recovered value must equal the
  // matching arctan / arccot expression.
  mpfr_t ref, pih;
  mpfr_init2(ref, kOraclePrec);
  mpfr_init2(pih, kOraclePrec);

  auto recovered = [](const std::vector<std::vector<Rational>>& m) {
    la::Mat A = la::mat_from_rationals(m);
    la::RobustLU lu = la::lu_decomp_pq(A, 60);
    return la::recover_x(lu).refine(50);
  };

  mpfr_set_ui(ref, 1, MPFR_RNDN);
  mpfr_div_ui(ref, ref, 3, MPFR_RNDN);
  mpfr_atan(ref, ref, MPFR_RNDN);  // atan(1/3)
  REQUIRE(mid_close(recovered({{3, 1}, {-1, 3}}), ref, 45));   // no swaps
  REQUIRE(mid_close(recovered({{1, 1}, {-1, 3}}), ref, 45));   // both swapped

  // Mixed parity lands on the arccot branch; ratio 3/4 keeps the answer
  // inside [0,1] where nothing clamps.
  mpfr_set_ui(ref, 3, MPFR_RNDN);
  mpfr_div_ui(ref, ref, 4, MPFR_RNDN);
  mpfr_atan(ref, ref, MPFR_RNDN);
  mpfr_const_pi(pih, MPFR_RNDN);
  mpfr_div_ui(pih, pih, 2, MPFR_RNDN);
  mpfr_sub(ref, pih, ref, MPFR_RNDN);  // pi/2 - atan(3/4)
  REQUIRE(mid_close(recovered({{1, 4}, {2, 3}}), ref, 45));    // columns swapped
  REQUIRE(mid_close(recovered({{3, 1}, {-4, 1}}), ref, 45));   // rows swapped

  mpfr_clear(ref);
  mpfr_clear(pih);
}

TEST_CASE("x comes back from the decomposition across the stress grid") {
  la::Mat Z = la::rellich_matrix(la::IntervalReal::exact(Rational(0))).as_mat();
  la::RobustLU zlu = la::lu_decomp_pq(Z, 20);
  DyadicInterval zx = la::recover_x(zlu).refine(12);
  REQUIRE(zx.lo.is_zero());
  REQUIRE(zx.hi <= Dyadic(Int(1), -12));

  for (long k = 20; k >= 1; --k) {
    for (long yi = 0; yi <= 8; ++yi) {
      Rational y(yi, 8);
      la::IntervalReal eps = la::rellich_eps(k, y);
      long tol = la::rellich_tol_bits(k, y);
      la::RellichMatrix B = la::rellich_matrix(eps);
      la::RobustLU lu = la::lu_decomp_pq(B.as_mat(), tol);
      DyadicInterval x = la::recover_x(lu).refine(12);
      REQUIRE(x.lo >= Dyadic());
      REQUIRE(x.hi <= Dyadic(1));
      REQUIRE(rabs(x.mid().to_rational() - y) <= Rational(1, t2k::pow2(10)));
    }
  }
}

TEST_CASE("matrix files round-trip through the decomposition") {
  la::json file = {
      {"rows", 3},
      {"cols", 3},
      {"entries",
       {{"1/2", 2, {{"dyadic", {"-7", -2}}}},
        {"-3/4", {{"rellich", {{"eps", "1/2"}, {"cell", {0, 0}}}}}, 1},
        {0, "5/8", "2/3"}}}};
  la::Mat A = la::mat_from_json(file);
  REQUIRE(A.rows == 3);
  REQUIRE(*A.at(0, 0).exact_tag() == Rational(1, 2));
  REQUIRE(*A.at(0, 2).exact_tag() == Rational(-7, 4));
  REQUIRE(!A.at(1, 1).exact_tag());

  la::RobustLU lu1 = la::lu_decomp_pq(A, 24);
  la::Mat A2 = la::mat_from_json(file);
  la::RobustLU lu2 = la::lu_decomp_pq(A2, 24);
  REQUIRE(la::lu_to_json(lu1).dump() == la::lu_to_json(lu2).dump());

  la::LuReport rep = la::validate_lu(A, lu1, 24);
  REQUIRE(rep.pass);
  la::json jr = la::report_to_json(rep);
  REQUIRE(jr.at("pass").get<bool>());
  REQUIRE(jr.at("profile").size() == 3);

  la::json bad = file;
  bad["entries"][0][0] = "not a number";
  REQUIRE_THROWS(la::mat_from_json(bad));
}
