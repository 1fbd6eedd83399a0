#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "t2kit/rational.hpp"

// Bijective numbering of the rationals. Index 0 is 0; after that, positive
// and negative values interleave (odd indices positive, even negative). The
// positive rationals are ordered by diagonals d = num + den of fractions in
// lowest terms, walking each diagonal in alternating direction: even d by
// ascending numerator, odd d descending. So the sequence starts
//   0, 1, -1, 2, -2, 1/2, -1/2, 1/3, -1/3, 3, -3, 4, ...
// Indices of deep approximants grow roughly like the square of the
// denominator, so everything here works on arbitrary-size integers.

namespace t2k {

/// Sum of Euler's totient over 1..n.
inline Int totient_summatory(const Int& n) {
  static std::mutex mu;
  static std::map<Int, Int> memo;
  if (n <= 0) return 0;
  if (n == 1) return 1;
  {
    std::scoped_lock lk(mu);
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
  }
  Int res = n * (n + 1) / 2;
  Int k = 2;
  while (k <= n) {
    Int q = n / k;
    Int k2 = n / q;
    res -= (k2 - k + 1) * totient_summatory(q);
    k = k2 + 1;
  }
  std::scoped_lock lk(mu);
  memo[n] = res;
  return res;
}

namespace detail {

inline std::vector<Int> distinct_prime_factors(Int d) {
  std::vector<Int> ps;
  for (Int p = 2; p * p <= d; ++p) {
    if (d % p == 0) {
      ps.push_back(p);
      while (d % p == 0) d /= p;
    }
  }
  if (d > 1) ps.push_back(d);
  return ps;
}

// #{ k in [1, x] : gcd(k, d) = 1 } by inclusion-exclusion over d's primes.
inline Int coprime_count(const std::vector<Int>& primes, const Int& x) {
  Int total = 0;
  std::vector<std::pair<Int, int>> stack{{1, +1}};
  for (const Int& p : primes) {
    std::size_t sz = stack.size();
    for (std::size_t i = 0; i < sz; ++i) {
      Int nd = stack[i].first * p;
      if (nd <= x) stack.emplace_back(nd, -stack[i].second);
    }
  }
  for (auto& [div, sign] : stack) total += sign * (x / div);
  return total;
}

}  // namespace detail

/// The rational at the given index.
inline Rational rational_enumeration(const Int& index) {
  if (index < 0) throw std::domain_error("rational_enumeration: negative index");
  if (index == 0) return Rational(0);
  bool positive = (index % 2) != 0;
  Int r = positive ? Int((index + 1) / 2) : Int(index / 2);  // 1-based rank among positives
  // Find the diagonal: smallest d >= 2 with totient_summatory(d) - 1 >= r.
  Int hi = 2;
  while (totient_summatory(hi) - 1 < r) hi *= 2;
  Int lo = 2;
  while (lo < hi) {
    Int mid = (lo + hi) / 2;
    if (totient_summatory(mid) - 1 >= r)
      hi = mid;
    else
      lo = mid + 1;
  }
  Int d = lo;
  Int pos = r - (totient_summatory(d - 1) - 1);  // 1-based position in diagonal d
  auto primes = detail::distinct_prime_factors(d);
  Int phi_d = detail::coprime_count(primes, d - 1);
  Int rank = (d % 2 == 0) ? pos : phi_d + 1 - pos;
  // rank-th value coprime to d in [1, d-1], ascending
  Int a = 1, b = d - 1;
  while (a < b) {
    Int mid = (a + b) / 2;
    if (detail::coprime_count(primes, mid) >= rank)
      b = mid;
    else
      a = mid + 1;
  }
  Rational q(a, d - a);
  return positive ? q : -q;
}

/// The index of a rational; inverse of rational_enumeration.
inline Int index_of(const Rational& q) {
  if (q == 0) return 0;
  bool positive = q > 0;
  Int num = boost::multiprecision::abs(numerator(q));
  Int den = denominator(q);
  Int d = num + den;
  auto primes = detail::distinct_prime_factors(d);
  Int rank = detail::coprime_count(primes, num);
  Int phi_d = detail::coprime_count(primes, d - 1);
  Int pos = (d % 2 == 0) ? rank : phi_d + 1 - rank;
  Int r = (totient_summatory(d - 1) - 1) + pos;
  return positive ? Int(2 * r - 1) : Int(2 * r);
}

}  // namespace t2k
