#pragma once

#include "t2kit/rational.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

// A real number accessed through refinement: ask for precision m, receive a
// dyadic interval of width at most 2^-m around the value. Refinements are
// memoized and forced to nest by intersecting each fresh enclosure with the
// running one, so callers may query precisions in any order. When the value
// is a known rational the tag rides along and every enclosure is checked
// against it.

namespace t2k::la {

class IntervalReal {
 public:
  using RefineFn = std::function<DyadicInterval(long)>;

  IntervalReal() : IntervalReal(Rational(0)) {}

  static IntervalReal exact(const Rational& q) { return IntervalReal(q); }

  static IntervalReal of_dyadic(const Dyadic& d) {
    auto st = std::make_shared<State>();
    st->fn = [d](long) { return DyadicInterval::point(d); };
    st->dtag = d;
    return IntervalReal(std::move(st));
  }

  static IntervalReal from_fn(RefineFn fn) {
    auto st = std::make_shared<State>();
    st->fn = std::move(fn);
    return IntervalReal(std::move(st));
  }

  static IntervalReal from_fn(RefineFn fn, const Rational& tag) {
    auto st = std::make_shared<State>();
    st->fn = std::move(fn);
    st->tag = tag;
    return IntervalReal(std::move(st));
  }

  /// Enclosure of width <= 2^-m, nested below every earlier enclosure.
  DyadicInterval refine(long m) const {
    if (m < 0) m = 0;
    std::lock_guard<std::mutex> lock(st_->mu);
    auto it = st_->memo.find(m);
    if (it != st_->memo.end()) return it->second;
    DyadicInterval raw = st_->fn(m);
    if (raw.width() > Dyadic(Int(1), -m))
      throw std::logic_error("IntervalReal: refinement wider than promised");
    DyadicInterval out = raw;
    if (st_->acc) {
      Dyadic lo = std::max(st_->acc->lo, raw.lo);
      Dyadic hi = std::min(st_->acc->hi, raw.hi);
      if (lo > hi)
        throw std::logic_error("IntervalReal: refinement left earlier enclosure");
      out = DyadicInterval(lo, hi);
    }
    if (st_->dtag) {
      if (out.lo > *st_->dtag || *st_->dtag > out.hi)
        throw std::logic_error("IntervalReal: enclosure misses exact value");
    } else if (st_->tag && !out.contains(*st_->tag)) {
      throw std::logic_error("IntervalReal: enclosure misses exact value");
    }
    st_->acc = out;
    st_->memo.emplace(m, out);
    return out;
  }

  Dyadic midpoint(long m) const { return refine(m).mid(); }

  const std::optional<Rational>& exact_tag() const {
    std::lock_guard<std::mutex> lock(st_->mu);
    if (!st_->tag && st_->dtag) st_->tag = st_->dtag->to_rational();
    return st_->tag;
  }

  /// The exact value when it is a known dyadic, without rationalizing it.
  const std::optional<Dyadic>& dyadic_tag() const { return st_->dtag; }

 private:
  struct State {
    RefineFn fn;
    std::optional<Rational> tag;
    std::optional<Dyadic> dtag;
    std::mutex mu;
    std::map<long, DyadicInterval> memo;
    std::optional<DyadicInterval> acc;
  };

  explicit IntervalReal(const Rational& q) {
    auto st = std::make_shared<State>();
    st->fn = [q](long m) { return DyadicInterval::of_rational(q, m + 1); };
    st->tag = q;
    st_ = std::move(st);
  }
  explicit IntervalReal(std::shared_ptr<State> st) : st_(std::move(st)) {}

  std::shared_ptr<State> st_;
};

/// Dense row-major matrix of refinable reals.
struct Mat {
  long rows = 0, cols = 0;
  std::vector<IntervalReal> e;

  Mat() = default;
  Mat(long r, long c) : rows(r), cols(c), e(static_cast<size_t>(r) * c) {
    if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
  }

  IntervalReal& at(long i, long j) {
    check(i, j);
    return e[static_cast<size_t>(i) * cols + j];
  }
  const IntervalReal& at(long i, long j) const {
    check(i, j);
    return e[static_cast<size_t>(i) * cols + j];
  }

 private:
  void check(long i, long j) const {
    if (i < 0 || i >= rows || j < 0 || j >= cols)
      throw std::out_of_range("Mat: index outside shape");
  }
};

inline Mat mat_from_rationals(const std::vector<std::vector<Rational>>& v) {
  if (v.empty() || v[0].empty()) throw std::invalid_argument("mat_from_rationals: empty");
  Mat m(static_cast<long>(v.size()), static_cast<long>(v[0].size()));
  for (long i = 0; i < m.rows; ++i) {
    if (static_cast<long>(v[i].size()) != m.cols)
      throw std::invalid_argument("mat_from_rationals: ragged rows");
    for (long j = 0; j < m.cols; ++j) m.at(i, j) = IntervalReal::exact(v[i][j]);
  }
  return m;
}

}  // namespace t2k::la
