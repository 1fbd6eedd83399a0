#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "t2kit/principles.hpp"
#include "t2kit/transformer.hpp"

// The plumbing that separates the two sides of a verification run. The blind
// side (H, K, link applications) receives names whose ground truths have been
// stripped and whose every read is metered and logged; the oracle side keeps
// the truths and judges. Names with unary blocks cannot be consumed bit by
// bit at useful depths, so the blind side reads through the same structured
// views the encodings publish; the meter records view reads and bit reads
// alike.

namespace t2k {

struct Divergence : std::runtime_error {
  long used = 0;
  Divergence(const std::string& where, long u)
      : std::runtime_error("read budget exhausted at " + where), used(u) {}
};

struct ReadMeter {
  long budget = 1'000'000;
  long used = 0;
  bool logging = true;
  std::vector<std::string> log;
  std::mutex mu;

  void charge(const std::string& unit) {
    std::scoped_lock lk(mu);
    ++used;
    if (logging) log.push_back(unit);
    if (used > budget) throw Divergence(unit, used);
  }
};

namespace detail {

inline std::shared_ptr<NameImpl> clone_shell(const NameImpl& src) {
  auto impl = std::make_shared<NameImpl>();
  impl->gen = src.gen;
  impl->kind = src.kind;
  impl->shape = src.shape;
  impl->tag_prefix_len = src.tag_prefix_len;
  impl->approx = src.approx;
  impl->ball = src.ball;
  impl->level = src.level;
  return impl;
}

}  // namespace detail

/// Structure and views survive; ground truths are dropped recursively.
inline Name without_truth(const Name& n) {
  auto impl = detail::clone_shell(n.raw());
  for (const Name& p : n.raw().parts) impl->parts.push_back(without_truth(p));
  return Name(impl);
}

/// Truth-free copy whose bit and view reads all charge the meter, tagged so
/// logs can tell the inputs apart.
inline Name blinded(const Name& n, std::shared_ptr<ReadMeter> m, const std::string& tag) {
  auto impl = detail::clone_shell(n.raw());
  Name base = n;
  impl->gen = [base, m, tag](const Int& pos) {
    m->charge(tag + ":bit:" + pos.str());
    return base.bit(pos);
  };
  if (n.raw().approx) {
    impl->approx = [base, m, tag](long i) {
      m->charge(tag + ":approx:" + std::to_string(i));
      return base.approx(i);
    };
  }
  if (n.raw().ball) {
    impl->ball = [base, m, tag](long s) {
      m->charge(tag + ":ball:" + std::to_string(s));
      return base.ball(s);
    };
  }
  if (n.raw().level) {
    impl->level = [base, m, tag](long l) {
      m->charge(tag + ":level:" + std::to_string(l));
      return base.level(l);
    };
  }
  for (std::size_t j = 0; j < n.raw().parts.size(); ++j)
    impl->parts.push_back(blinded(n.raw().parts[j], m, tag + "." + std::to_string(j)));
  return Name(impl);
}

/// What a reduction is handed: metered name, links without their oracle
/// channel.
inline Instance blind_instance(const Instance& inst, std::shared_ptr<ReadMeter> m) {
  Instance out(blinded(inst.name, m, "src"));
  for (const StarLink& l : inst.links) out.links.push_back(StarLink{l.apply, nullptr});
  return out;
}

/// Bit-scan decode of a unary natural. Never consults ground truth, so blind
/// and oracle runs of the same logic read the same value.
inline long blind_nat(const Name& n, long cap = 1L << 16) {
  for (long i = 0; i <= cap; ++i)
    if (n.bit(i) == 1) return i;
  throw Divergence("nat name: no terminator within scan cap", cap);
}

/// Approximation access that works for any real name: the published view when
/// there is one, block decoding otherwise.
inline std::function<Rational(long)> approx_getter(const Name& n) {
  if (n.has_approx()) {
    Name b = n;
    return [b](long i) { return b.approx(i); };
  }
  return bit_approx_view(n);
}

inline std::function<std::optional<Ball>(long)> ball_getter(const Name& n) {
  if (n.has_ball()) {
    Name b = n;
    return [b](long s) { return b.ball(s); };
  }
  return bit_ball_view(n);
}

inline std::function<LevelRec(long)> level_getter(const Name& n) {
  if (n.has_level()) {
    Name b = n;
    return [b](long l) { return b.level(l); };
  }
  return bit_level_view(n);
}

/// One ball of the alternating schedule that exhausts [0,1] minus a point
/// pinned within `err` of `center`: even steps cut away everything below, odd
/// steps everything above, with a safety gap halving every other step.
inline std::optional<Ball> shrink_ball(const Rational& center, const Rational& err, long step) {
  Rational gap(1, pow2(step / 2 + 2));
  if (step % 2 == 0) {
    Rational hi = center - err - gap;
    if (hi <= -1) return std::nullopt;
    return Ball{(hi - 1) / 2, (hi + 1) / 2};
  }
  Rational lo = center + err + gap;
  if (lo >= 2) return std::nullopt;
  return Ball{(lo + 2) / 2, (2 - lo) / 2};
}

/// Reattach a ground truth to a name, pushing tuple and tag truths down into
/// the matching parts.
inline Name with_truth(const Name& n, std::shared_ptr<const Truth> t) {
  auto impl = detail::clone_shell(n.raw());
  impl->truth = t;
  impl->parts = n.raw().parts;
  if (t) {
    if (auto* tt = std::get_if<TupleTruth>(&t->var());
        tt && n.raw().shape == "tuple" && tt->parts.size() == n.raw().parts.size()) {
      impl->parts.clear();
      for (std::size_t i = 0; i < tt->parts.size(); ++i)
        impl->parts.push_back(with_truth(n.raw().parts[i], tt->parts[i]));
    } else if (auto* gt = std::get_if<TagTruth>(&t->var());
               gt && n.raw().shape == "tag" && n.raw().parts.size() == 1) {
      impl->parts.clear();
      impl->parts.push_back(with_truth(n.raw().parts[0], gt->inner));
    }
  }
  return Name(impl);
}

/// A stream program run on demand: the output name extends the run as deeper
/// bits are requested. Re-runs are cheap because input names cache their bits.
class LazyRun {
 public:
  LazyRun(TransformerProgram prog, std::vector<Name> inputs, RunConfig cfg = {})
      : st_(std::make_shared<State>()) {
    st_->prog = std::move(prog);
    st_->inputs = std::move(inputs);
    st_->cfg = cfg;
  }

  int bit(const Int& pos) const {
    long p = pos.convert_to<long>();
    std::scoped_lock lk(st_->mu);
    if (static_cast<long>(st_->res.bits.size()) <= p && !st_->res.diverged && !st_->res.halted)
      st_->res = run_transformer(st_->prog, st_->inputs, p + 1, st_->cfg);
    if (static_cast<long>(st_->res.bits.size()) <= p)
      throw Divergence(st_->prog.note + ": output bit " + std::to_string(p) +
                           (st_->res.halted ? " (program halted)" : " (program stalled)"),
                       st_->cfg.budget_per_bit);
    return st_->res.bits[static_cast<std::size_t>(p)] == '1' ? 1 : 0;
  }

  Name as_name(std::string kind) const {
    LazyRun self = *this;
    return Name::from_bits([self](const Int& pos) { return self.bit(pos); }, std::move(kind));
  }

  RunResult snapshot() const {
    std::scoped_lock lk(st_->mu);
    return st_->res;
  }

 private:
  struct State {
    TransformerProgram prog;
    std::vector<Name> inputs;
    RunConfig cfg;
    RunResult res;
    mutable std::mutex mu;
  };
  std::shared_ptr<State> st_;
};

// --- lazily-built structured names ---

inline Name closed_unit_from_balls(std::function<std::optional<Ball>(long)> view,
                                   std::shared_ptr<const Truth> truth = nullptr) {
  auto len = [view](long b) {
    auto o = view(b);
    if (!o) return Int(1);
    return Int(pair_nat(index_of(o->center), positive_rational_index(o->radius)) + 2);
  };
  auto bit_in = [view](long b, const Int& off) {
    auto o = view(b);
    if (!o) return 1;
    Int m = pair_nat(index_of(o->center), positive_rational_index(o->radius));
    return off == m + 1 ? 1 : 0;
  };
  BlockTable table(len, bit_in);
  auto impl = std::make_shared<NameImpl>();
  impl->gen = table.as_fn();
  impl->kind = "closed_unit";
  impl->truth = std::move(truth);
  impl->ball = std::move(view);
  return Name(impl);
}

inline Name aou_tree_from_levels(std::function<LevelRec(long)> view,
                                 std::shared_ptr<const Truth> truth = nullptr) {
  auto first_collapse = [view](long l) {
    return !view(l).full && (l == 1 || view(l - 1).full);
  };
  auto len = [view, first_collapse](long b) {
    long l = b + 1;
    if (view(l).full) return Int(1);
    return first_collapse(l) ? Int(1 + l) : Int(2);
  };
  auto bit_in = [view, first_collapse](long b, const Int& off) {
    long l = b + 1;
    LevelRec r = view(l);
    if (r.full) return 0;
    if (off == 0) return 1;
    if (first_collapse(l)) return r.node[off.convert_to<std::size_t>() - 1];
    return r.node.back();
  };
  BlockTable table(len, bit_in);
  auto impl = std::make_shared<NameImpl>();
  impl->gen = table.as_fn();
  impl->kind = "aou_tree";
  impl->truth = std::move(truth);
  impl->level = std::move(view);
  return Name(impl);
}

// --- exact interval bookkeeping over [0,1] ---

/// Union of open rational intervals, kept as sorted pairwise-disjoint pieces.
/// Touching pieces stay separate: their shared endpoint is not covered.
class IntervalCover {
 public:
  void add(const Rational& lo, const Rational& hi) {
    if (lo >= hi) return;
    Rational a = lo, b = hi;
    std::vector<std::pair<Rational, Rational>> keep;
    for (auto& iv : ivs_) {
      if (iv.first < b && a < iv.second) {
        a = std::min(a, iv.first);
        b = std::max(b, iv.second);
      } else {
        keep.push_back(iv);
      }
    }
    keep.emplace_back(a, b);
    std::sort(keep.begin(), keep.end());
    ivs_ = std::move(keep);
  }

  void add(const Ball& ball) { add(ball.center - ball.radius, ball.center + ball.radius); }

  const std::vector<std::pair<Rational, Rational>>& intervals() const { return ivs_; }

  /// Closed pieces of [0,1] not covered; pieces may be single points.
  std::vector<std::pair<Rational, Rational>> leftover_unit() const {
    std::vector<std::pair<Rational, Rational>> out;
    Rational pos(0);
    for (const auto& iv : ivs_) {
      if (iv.second <= pos) continue;
      if (iv.first > 1) break;
      if (iv.first >= pos) out.emplace_back(pos, std::min(iv.first, Rational(1)));
      pos = std::max(pos, iv.second);
      if (pos > 1) return out;
    }
    if (pos <= 1) out.emplace_back(pos, Rational(1));
    return out;
  }

  bool covers_unit() const { return leftover_unit().empty(); }

 private:
  std::vector<std::pair<Rational, Rational>> ivs_;
};

namespace detail {

inline std::pair<Int, Int> rat_key(const Rational& q) {
  return {boost::multiprecision::denominator(q), abs(boost::multiprecision::numerator(q))};
}

}  // namespace detail

/// The rational with the smallest denominator (then numerator) in [a,b], by
/// the continued-fraction walk.
inline Rational simplest_in(const Rational& a, const Rational& b) {
  if (a > b) throw std::invalid_argument("simplest_in: empty interval");
  if (a <= 0 && 0 <= b) return Rational(0);
  if (b < 0) return -simplest_in(-b, -a);
  Int fa = floor_div(boost::multiprecision::numerator(a), boost::multiprecision::denominator(a));
  Int ca = Rational(fa) == a ? fa : fa + 1;
  if (Rational(ca) <= b) return Rational(ca);
  Rational ra = a - Rational(fa), rb = b - Rational(fa);
  return Rational(fa) + 1 / simplest_in(1 / rb, 1 / ra);
}

/// Simplest rational over a set of closed intervals, with the index of the
/// interval it came from.
inline std::pair<Rational, std::size_t> simplest_gap(
    const std::vector<std::pair<Rational, Rational>>& gaps) {
  if (gaps.empty()) throw std::invalid_argument("simplest_gap: no gaps");
  Rational best;
  std::size_t at = 0;
  bool have = false;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    Rational c = simplest_in(gaps[i].first, gaps[i].second);
    if (!have || detail::rat_key(c) < detail::rat_key(best)) {
      best = c;
      at = i;
      have = true;
    }
  }
  return {best, at};
}

// --- total completion of a partially emitted closed_unit name ---

struct DensePoint {
  Name name;
  UnitSetTruth truth;
};

/// Extend an already-committed ball prefix into a full singleton name: pick
/// the simplest rational still uncovered, then schedule balls exhausting the
/// rest of [0,1]. The committed slots are reproduced verbatim, so the result
/// is a valid continuation of whatever was already written.
inline DensePoint dense_extend(const std::vector<std::optional<Ball>>& committed) {
  IntervalCover cover;
  long first_ball = -1;
  for (long s = 0; s < static_cast<long>(committed.size()); ++s) {
    if (!committed[s]) continue;
    cover.add(*committed[s]);
    if (first_ball < 0) first_ball = s;
  }
  auto gaps = cover.leftover_unit();
  if (gaps.empty()) throw std::domain_error("dense_extend: committed balls already cover [0,1]");

  auto [x, xin] = simplest_gap(gaps);

  std::vector<std::function<Ball(long)>> jobs;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (i == xin) continue;
    Rational lo = gaps[i].first, hi = gaps[i].second;
    Rational margin = std::min(abs(Rational(lo - x)), abs(Rational(hi - x))) / 2;
    Ball whole{(lo + hi) / 2, (hi - lo) / 2 + margin};
    jobs.emplace_back([whole](long) { return whole; });
  }
  const Rational a = gaps[xin].first, b = gaps[xin].second;
  if (x > a) {
    Rational w = x - a;
    jobs.emplace_back([a, x, w](long t) {
      Rational hi = x - w / pow2(t + 1);
      return Ball{(a - 1 + hi) / 2, (hi - a + 1) / 2};
    });
  }
  if (x < b) {
    Rational w = b - x;
    jobs.emplace_back([b, x, w](long t) {
      Rational lo = x + w / pow2(t + 1);
      return Ball{(lo + b + 1) / 2, (b + 1 - lo) / 2};
    });
  }

  long k = static_cast<long>(committed.size());
  long njobs = static_cast<long>(jobs.size());
  std::vector<std::optional<Ball>> head = committed;
  auto view = [head, k, jobs, njobs](long slot) -> std::optional<Ball> {
    if (slot < k) return head[static_cast<std::size_t>(slot)];
    if (njobs == 0) return std::nullopt;
    long u = slot - k;
    return jobs[static_cast<std::size_t>(u % njobs)](u / njobs);
  };
  UnitSetTruth truth{false, x, first_ball >= 0 ? first_ball : (njobs > 0 ? k : -1)};
  if (truth.collapse_slot < 0)
    throw std::logic_error("dense_extend: no ball anywhere in a proper singleton");
  return DensePoint{closed_unit_from_balls(view, make_truth(truth)), truth};
}

// --- budgeted observation: recover a usable truth from bare bits ---

/// Ground truth of a name as far as `budget` reads reveal it. Wherever the
/// encoding leaves a property semi-decidable (a stream being zero, a set
/// staying full), silence up to the budget is read as the negative answer;
/// reports that depend on this carry the budget with them.
inline std::shared_ptr<const Truth> observed_truth(const std::string& space, const Name& n,
                                                   long budget) {
  if (space == "cantor") {
    std::string bits;
    for (long i = 0; i < budget; ++i) {
      int bv = n.bit(i);
      bits.push_back(bv ? '1' : '0');
      if (bv) return make_truth(StreamTruth{StreamDesc::prefix(bits)});
    }
    return make_truth(StreamTruth{StreamDesc::zeros()});
  }
  if (space == "nat") {
    for (long i = 0; i < budget; ++i)
      if (n.bit(i) == 1) return make_truth(NatTruth{Int(i)});
    throw Divergence("nat name: no terminator within budget", budget);
  }
  if (space == "cut") {
    for (long s = 0; s < budget; ++s) {
      if (n.bit(s) != 1) continue;
      std::string tail;
      for (long j = 0; j < budget; ++j) tail.push_back(n.bit(s + 1 + j) ? '1' : '0');
      return make_truth(CutTruth{s, StreamDesc::prefix(tail)});
    }
    return make_truth(CutTruth{-1, StreamDesc::zeros()});
  }
  if (space.rfind("finset:", 0) == 0) {
    long bound = std::stol(space.substr(7));
    return make_truth(SetTruth{bound, finset_elems(n, bound, budget)});
  }
  if (space == "closed_unit") {
    std::function<std::optional<Ball>(long)> view;
    if (n.has_ball()) {
      Name b = n;
      view = [b](long s) { return b.ball(s); };
    } else {
      view = bit_ball_view(n);
    }
    long first_ball = -1;
    for (long s = 0; s < budget && first_ball < 0; ++s)
      if (view(s)) first_ball = s;
    if (first_ball < 0) return make_truth(UnitSetTruth{true, Rational(0), -1});
    // A fixed window past the first ball pins the point far below every
    // judging tolerance; scanning to the full budget instead drags
    // huge-denominator interval arithmetic in for no extra certainty.
    IntervalCover cover;
    for (long s = first_ball; s < first_ball + 160; ++s) {
      auto o = view(s);
      if (o) cover.add(*o);
    }
    auto gaps = cover.leftover_unit();
    if (gaps.empty())
      throw std::runtime_error("closed_unit name: balls covered all of [0,1]");
    return make_truth(UnitSetTruth{false, simplest_gap(gaps).first, first_ball});
  }
  if (space == "aou_tree") {
    std::function<LevelRec(long)> view;
    if (n.has_level()) {
      Name b = n;
      view = [b](long l) { return b.level(l); };
    } else {
      view = bit_level_view(n);
    }
    // Level decoding from bare bits costs a whole prefix per level, so the
    // level scan is capped separately from the bit budget.
    const long lcap = std::min(budget, 512L);
    for (long l = 1; l <= lcap; ++l) {
      LevelRec r = view(l);
      if (r.full) continue;
      std::string path;
      for (int bv : r.node) path.push_back(bv ? '1' : '0');
      for (long d = l + 1; d <= lcap; ++d) {
        LevelRec rd = view(d);
        if (rd.full || static_cast<long>(rd.node.size()) != d)
          throw std::runtime_error("aou_tree name: level " + std::to_string(d) +
                                   " is not a single extension after the collapse");
        path.push_back(rd.node.back() ? '1' : '0');
      }
      return make_truth(TreeTruth{false, l, StreamDesc::prefix(path)});
    }
    return make_truth(TreeTruth{});
  }
  if (std::string inner; detail::strip_wrapper(space, "tuple", inner)) {
    auto args = detail::split_args(inner);
    auto parts = untuple(n, args.size());
    TupleTruth t;
    for (std::size_t i = 0; i < args.size(); ++i)
      t.parts.push_back(observed_truth(args[i], parts[i], budget));
    return make_truth(t);
  }
  throw std::invalid_argument("observed_truth: unsupported space '" + space + "'");
}

}  // namespace t2k
