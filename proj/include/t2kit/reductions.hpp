#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "t2kit/expr.hpp"

// Reductions between problems and the machinery that checks them. A reduction
// carries two blind maps: `forward` turns a source instance into a target
// instance, `backward` turns any target answer back into a source answer.
// Both run on metered, truth-free names. The oracle-side `annotate` closure
// reattaches the target ground truth so target answers can be sampled and the
// final answer judged.

namespace t2k {

struct Reduction {
  std::string id;
  Problem source;
  Problem target;
  std::function<Instance(const Instance&, long)> forward;
  std::function<Name(const Instance&, const Name&, long)> backward;
  std::function<Instance(const Instance&, Instance, long)> annotate;
};

// --- verification ---

struct VerifyConfig {
  long depth = 20;
  long budget = 1'000'000;
  long adversaries = 3;
  std::uint64_t seed = 2024;
  bool log_reads = false;
};

struct VerifyFailure {
  std::size_t instance = 0;
  long adversary = -1;
  std::string stage;
  std::string detail;
};

struct VerifyReport {
  std::string reduction;
  long depth = 0;
  long budget = 0;
  std::size_t instances = 0;
  long cells = 0;
  std::vector<VerifyFailure> failures;
  bool ok() const { return failures.empty(); }
};

/// Every corpus instance is pushed through forward blind, the built target
/// instance is checked against the target's domain, adversarial target
/// answers are pulled back through backward, and the results are judged
/// against the source ground truth. Budget overruns are recorded as failures,
/// never crashes.
inline VerifyReport verify_reduction(const Reduction& red, const std::vector<Instance>& corpus,
                                     const VerifyConfig& cfg = {}) {
  VerifyReport rep;
  rep.reduction = red.id;
  rep.depth = cfg.depth;
  rep.budget = cfg.budget;
  Prng g(cfg.seed ^ 0x71374491428a2f98ULL);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Instance& src = corpus[i];
    ++rep.instances;
    auto meter = std::make_shared<ReadMeter>();
    meter->budget = cfg.budget;
    meter->logging = cfg.log_reads;
    Instance blind = blind_instance(src, meter);

    Instance tgt;
    try {
      Instance built = red.forward(blind, cfg.depth);
      tgt = red.annotate ? red.annotate(src, std::move(built), cfg.depth) : std::move(built);
    } catch (const std::exception& e) {
      rep.failures.push_back({i, -1, "forward", e.what()});
      continue;
    }

    try {
      Verdict chk = red.target.check_instance(tgt, cfg.depth);
      if (!chk.ok) {
        rep.failures.push_back({i, -1, "target-instance", chk.witness});
        continue;
      }
    } catch (const std::exception& e) {
      rep.failures.push_back({i, -1, "target-instance", e.what()});
      continue;
    }

    std::vector<Name> answers;
    try {
      answers = red.target.sample(tgt, cfg.adversaries, g.next());
    } catch (const std::exception& e) {
      rep.failures.push_back({i, -1, "adversary", e.what()});
      continue;
    }
    if (answers.empty()) {
      rep.failures.push_back({i, -1, "adversary", "no valid target answers sampled"});
      continue;
    }

    for (long a = 0; a < static_cast<long>(answers.size()); ++a) {
      ++rep.cells;
      try {
        Name handed = blinded(without_truth(answers[static_cast<std::size_t>(a)]), meter,
                              "ans" + std::to_string(a));
        Name back = red.backward(blind, handed, cfg.depth);
        Verdict v = red.source.validate(src, back, cfg.depth);
        if (!v.ok) rep.failures.push_back({i, a, "judge", v.witness});
      } catch (const std::exception& e) {
        rep.failures.push_back({i, a, "backward", e.what()});
      }
    }
  }
  return rep;
}

inline json verify_report_to_json(const VerifyReport& rep) {
  json fails = json::array();
  for (const VerifyFailure& f : rep.failures)
    fails.push_back({{"instance", f.instance},
                     {"adversary", f.adversary},
                     {"stage", f.stage},
                     {"detail", f.detail}});
  return {{"reduction", rep.reduction}, {"depth", rep.depth},       {"budget", rep.budget},
          {"instances", rep.instances}, {"cells", rep.cells},       {"ok", rep.ok()},
          {"failures", fails}};
}

/// a: f <= g and b: g <= h give f <= h. The middle instance is rebuilt
/// deterministically whenever it is needed.
inline Reduction compose(const Reduction& a, const Reduction& b) {
  if (a.target.id != b.source.id)
    throw std::invalid_argument("compose: " + a.id + " targets " + a.target.id + " but " + b.id +
                                " starts from " + b.source.id);
  Reduction r;
  r.id = a.id + ";" + b.id;
  r.source = a.source;
  r.target = b.target;
  auto af = a.forward, bf = b.forward;
  auto ab = a.backward, bb = b.backward;
  auto aan = a.annotate, ban = b.annotate;
  r.forward = [af, bf](const Instance& src, long d) { return bf(af(src, d), d); };
  r.backward = [af, ab, bb](const Instance& src, const Name& ans, long d) {
    return ab(src, bb(af(src, d), ans, d), d);
  };
  r.annotate = [af, aan, ban](const Instance& src, Instance tgt, long d) {
    Instance mid = aan(src, af(src, d), d);
    return ban(mid, std::move(tgt), d);
  };
  return r;
}

/// View-level agreement of two names of the same space, deep enough to catch
/// any divergence a validator could see.
inline bool names_agree(const std::string& space, const Name& a, const Name& b, long depth = 12) {
  if (space == "real") {
    auto ga = approx_getter(a), gb = approx_getter(b);
    for (long i = 0; i <= depth; ++i)
      if (ga(i) != gb(i)) return false;
    return true;
  }
  if (space == "closed_unit") {
    auto ga = ball_getter(a), gb = ball_getter(b);
    for (long s = 0; s <= depth; ++s) {
      auto oa = ga(s), ob = gb(s);
      if (oa.has_value() != ob.has_value()) return false;
      if (oa && (oa->center != ob->center || oa->radius != ob->radius)) return false;
    }
    return true;
  }
  if (space == "aou_tree") {
    auto ga = level_getter(a), gb = level_getter(b);
    for (long l = 1; l <= depth; ++l) {
      LevelRec ra = ga(l), rb = gb(l);
      if (ra.full != rb.full || ra.node != rb.node) return false;
    }
    return true;
  }
  if (std::string inner; detail::strip_wrapper(space, "tuple", inner)) {
    auto args = detail::split_args(inner);
    auto pa = untuple(a, args.size()), pb = untuple(b, args.size());
    for (std::size_t i = 0; i < args.size(); ++i)
      if (!names_agree(args[i], pa[i], pb[i], depth)) return false;
    return true;
  }
  return a.prefix(4 * depth) == b.prefix(4 * depth);
}

// --- shared pieces of the library constructions ---

namespace detail {

inline long ceil_log2(long v) {
  long r = 0;
  while ((1L << r) < v) ++r;
  return r;
}

/// |ap(u)| > 2^-u certifies the value is nonzero; the converse holds from
/// roughly u = log2(1/|value|) + 1 on.
inline bool nonzero_at(const std::function<Rational(long)>& ap, long u) {
  return abs(Rational(ap(u))) > Rational(1, pow2(u));
}

inline std::optional<long> first_nonzero_stage(const std::function<Rational(long)>& ap,
                                               long cap) {
  for (long u = 0; u <= cap; ++u)
    if (nonzero_at(ap, u)) return u;
  return std::nullopt;
}

/// Quotient estimate with a certified error bound, valid once stage k0
/// witnesses the denominator away from zero. The bound shrinks below
/// 2^-(u+3). Either sign of the denominator works.
inline std::pair<Rational, Rational> div_est(const std::function<Rational(long)>& ax,
                                             const std::function<Rational(long)>& ay, long k0,
                                             long u) {
  for (long t = k0 + u + 1;; ++t) {
    Rational qy = ay(t), e(1, pow2(t));
    Rational aqy = abs(Rational(qy));
    Rational ylow = aqy - e;
    if (!(ylow > 0)) continue;
    Rational qx = ax(t);
    Rational bound = e * (aqy + abs(Rational(qx))) / (ylow * aqy);
    if (bound <= Rational(1, pow2(u + 3))) return {qx / qy, bound};
  }
}

/// Excluded elements whose exclusion block closes within the first
/// `window`+1 bits of a finite-set name.
inline std::set<long> excluded_by(const Name& n, long bound, long window) {
  std::set<long> excluded;
  long last_zero = -1;
  for (long p = 0; p <= window; ++p) {
    if (n.bit(p) == 0) {
      if (last_zero >= 0) {
        long k = p - last_zero - 1;
        if (k <= bound) excluded.insert(k);
      }
      last_zero = p;
    }
  }
  return excluded;
}

struct SplitNode {
  long lo, hi, mid;
};

/// Preorder internal nodes of the balanced range tree over leaves [lo, hi).
inline void split_ranges(long lo, long hi, std::vector<SplitNode>& out) {
  if (hi - lo < 2) return;
  long mid = lo + (hi - lo + 1) / 2;
  out.push_back({lo, hi, mid});
  split_ranges(lo, mid, out);
  split_ranges(mid, hi, out);
}

inline std::size_t node_index(const std::vector<SplitNode>& nodes, long lo, long hi) {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].lo == lo && nodes[i].hi == hi) return i;
  throw std::logic_error("range tree: no node for [" + std::to_string(lo) + "," +
                         std::to_string(hi) + ")");
}

/// Shared state that turns a ball stream into committed path bits of the
/// 5/8-overlap interval tree. Every decision depends only on the slot values,
/// never on the order bits are requested in, so blind and oracle runs agree.
struct UnitPathMill {
  std::function<std::optional<Ball>(long)> bv;
  long scanned = 0;
  long first = -1;
  IntervalCover cover;
  std::vector<int> bits;
  Rational lo{0}, wid{1};
  std::mutex mu;

  bool full_at(long level) {
    std::scoped_lock lk(mu);
    scan_to(4 * level + 16);
    return first < 0 || first >= 4 * level + 16;
  }

  long collapse_level() {
    std::scoped_lock lk(mu);
    long m = 1;
    while (4 * m + 16 <= first) ++m;
    return m;
  }

  int path_bit(long i) {
    std::scoped_lock lk(mu);
    while (static_cast<long>(bits.size()) <= i) advance();
    return bits[static_cast<std::size_t>(i)];
  }

 private:
  void scan_to(long upto) {
    for (; scanned < upto; ++scanned) {
      auto o = bv(scanned);
      if (o) {
        cover.add(*o);
        if (first < 0) first = scanned;
      }
    }
  }

  void advance() {
    for (;;) {
      bool any = false;
      Rational a, b;
      Rational hi = lo + wid;
      for (const auto& g : cover.leftover_unit()) {
        Rational ga = std::max(g.first, lo), gb = std::min(g.second, hi);
        if (ga > gb) continue;
        if (!any) {
          a = ga;
          b = gb;
          any = true;
        } else {
          a = std::min(a, ga);
          b = std::max(b, gb);
        }
      }
      if (!any)
        throw std::runtime_error("unit path: the uncovered point left the committed interval");
      if (b - a <= wid / 8) {
        int c = a + b <= 2 * lo + wid ? 0 : 1;
        Rational w0 = wid;
        wid = w0 * 5 / 8;
        if (c == 1) lo += w0 * 3 / 8;
        bits.push_back(c);
        return;
      }
      scan_to(scanned + 8);
    }
  }
};

inline long overlap_collapse_level(long first_ball_slot) {
  long m = 1;
  while (4 * m + 16 <= first_ball_slot) ++m;
  return m;
}

/// Path bits at depth m pin the point within (5/8)^m; m = ceil(37(i+2)/25)
/// brings that below 2^-(i+2).
inline long overlap_path_len(long i) { return (37 * (i + 2) + 24) / 25; }

inline Rational overlap_decode(const Name& path, long i) {
  long m = overlap_path_len(i);
  Rational lo(0), wid(1);
  for (long j = 0; j < m; ++j) {
    Rational w0 = wid;
    wid = w0 * 5 / 8;
    if (path.bit(j) == 1) lo += w0 * 3 / 8;
  }
  return lo + wid / 2;
}

inline std::pair<Name, Name> blind_parts(const Instance& inst) {
  auto parts = untuple(inst.name, 2);
  return {parts[0], parts[1]};
}

}  // namespace detail

// --- the reduction library ---

inline Reduction ubrdiv_to_lpo() {
  Reduction r;
  r.id = "ubrdiv_to_lpo";
  r.source = ubrdiv();
  r.target = lpo();
  r.forward = [](const Instance& src, long) {
    auto [xn, yn] = detail::blind_parts(src);
    auto ay = approx_getter(yn);
    auto gen = [ay](const Int& pos) {
      long j = pos.convert_to<long>();
      for (long u = 0; u <= j; ++u)
        if (detail::nonzero_at(ay, u)) return 1;
      return 0;
    };
    return Instance(Name::from_bits(gen, "cantor"));
  };
  r.backward = [](const Instance& src, const Name& ans, long) {
    if (blind_nat(ans) == 1) return encode_real(Rational(0));
    auto [xn, yn] = detail::blind_parts(src);
    auto ax = approx_getter(xn), ay = approx_getter(yn);
    long k0 = 0;
    while (!detail::nonzero_at(ay, k0)) ++k0;
    auto fn = [ax, ay, k0](long i) {
      return detail::div_est(ax, ay, k0, std::max(0L, i)).first;
    };
    return real_name_from_approx(fn, nullptr);
  };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    Rational y = detail::rat_pair_of(src, "ubrdiv_to_lpo").second;
    std::shared_ptr<const Truth> t;
    if (y == 0) {
      t = make_truth(StreamTruth{StreamDesc::zeros()});
    } else {
      auto ay = approx_getter(untuple(src.name, 2)[1]);
      auto j = detail::first_nonzero_stage(ay, 1L << 15);
      if (!j) throw std::logic_error("ubrdiv_to_lpo: nonzero denominator never witnessed");
      t = make_truth(StreamTruth{StreamDesc::prefix(std::string(*j, '0') + "1")});
    }
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline Reduction lpo_to_ubrdiv() {
  Reduction r;
  r.id = "lpo_to_ubrdiv";
  r.source = lpo();
  r.target = ubrdiv();
  r.forward = [](const Instance& src, long) {
    Name p = src.name;
    auto ay = [p](long i) -> Rational {
      for (long u = 0; u <= i; ++u)
        if (p.bit(u) == 1) return Rational(1, pow2(u));
      return Rational(0);
    };
    auto ax = [p](long i) -> Rational {
      long window = i + detail::ceil_log2(i + 2) + 2;
      for (long u = 0; u <= window; ++u)
        if (p.bit(u) == 1) return Rational(u) / pow2(u);
      return Rational(0);
    };
    return Instance(tuple({real_name_from_approx(ax, nullptr), real_name_from_approx(ay, nullptr)}));
  };
  r.backward = [](const Instance& src, const Name& ans, long) {
    Rational shifted = approx_getter(ans)(2) + Rational(1, 2);
    Int fl = floor_div(boost::multiprecision::numerator(shifted),
                       boost::multiprecision::denominator(shifted));
    if (fl < 0 || fl > Int(1L << 40)) return encode_nat(1);
    return encode_nat(src.name.bit(fl.convert_to<long>()) == 1 ? 0 : 1);
  };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto fo = first_one(src.name);
    TupleTruth t;
    if (!fo) {
      t.parts = {make_truth(RatTruth{Rational(0)}), make_truth(RatTruth{Rational(0)})};
    } else {
      t.parts = {make_truth(RatTruth{Rational(*fo) / pow2(*fo)}),
                 make_truth(RatTruth{Rational(1, pow2(*fo))})};
    }
    return Instance(with_truth(tgt.name, make_truth(t)));
  };
  return r;
}

inline Reduction rdiv_to_aouc_unit() {
  Reduction r;
  r.id = "rdiv_to_aouc_unit";
  r.source = rdiv();
  r.target = aouc_unit();
  r.forward = [](const Instance& src, long) {
    auto [xn, yn] = detail::blind_parts(src);
    auto ax = approx_getter(xn), ay = approx_getter(yn);
    auto view = [ax, ay](long s) -> std::optional<Ball> {
      long k0 = -1;
      for (long u = 0; u <= s && k0 < 0; ++u)
        if (detail::nonzero_at(ay, u)) k0 = u;
      if (k0 < 0) return std::nullopt;
      auto est = detail::div_est(ax, ay, k0, s - k0);
      return shrink_ball(est.first, est.second, s - k0);
    };
    return Instance(closed_unit_from_balls(view));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto [x, y] = detail::rat_pair_of(src, "rdiv_to_aouc_unit");
    std::shared_ptr<const Truth> t;
    if (y == 0) {
      t = make_truth(UnitSetTruth{});
    } else {
      auto ay = approx_getter(untuple(src.name, 2)[1]);
      auto k0 = detail::first_nonzero_stage(ay, 1L << 15);
      if (!k0) throw std::logic_error("rdiv_to_aouc_unit: nonzero denominator never witnessed");
      t = make_truth(UnitSetTruth{false, x / y, *k0});
    }
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline Reduction aouc_unit_to_rdiv() {
  struct Hull {
    std::function<std::optional<Ball>(long)> bv;
    long scanned = 0;
    long first = -1;
    IntervalCover cover;
    std::mutex mu;

    void scan_to(long upto) {
      for (; scanned < upto; ++scanned) {
        auto o = bv(scanned);
        if (o) {
          cover.add(*o);
          if (first < 0) first = scanned;
        }
      }
    }

    std::pair<Rational, Rational> hull() {
      bool any = false;
      Rational a, b;
      for (const auto& g : cover.leftover_unit()) {
        if (!any) {
          a = g.first;
          b = g.second;
          any = true;
        } else {
          a = std::min(a, g.first);
          b = std::max(b, g.second);
        }
      }
      if (!any) throw std::runtime_error("aouc_unit_to_rdiv: balls covered all of [0,1]");
      return {a, b};
    }
  };

  Reduction r;
  r.id = "aouc_unit_to_rdiv";
  r.source = aouc_unit();
  r.target = rdiv();
  r.forward = [](const Instance& src, long) {
    auto st = std::make_shared<Hull>();
    st->bv = ball_getter(src.name);
    auto ay = [st](long i) -> Rational {
      std::scoped_lock lk(st->mu);
      st->scan_to(i + 1);
      if (st->first < 0) return Rational(0);
      return Rational(1, pow2(st->first + 1));
    };
    auto ax = [st](long i) -> Rational {
      std::scoped_lock lk(st->mu);
      st->scan_to(i + 1);
      if (st->first < 0) return Rational(0);
      long t = st->first;
      Rational want = t + 2 >= i ? Rational(pow2(t + 2 - i)) : Rational(1, pow2(i - t - 2));
      for (;;) {
        auto [a, b] = st->hull();
        if (b - a <= want) return (a + b) / 2 / pow2(t + 1);
        st->scan_to(st->scanned + 8);
      }
    };
    return Instance(tuple({real_name_from_approx(ax, nullptr), real_name_from_approx(ay, nullptr)}));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto* u = truth_as<UnitSetTruth>(src.name.truth());
    if (!u) throw std::runtime_error("aouc_unit_to_rdiv: source carries no set truth");
    TupleTruth t;
    if (u->is_all) {
      t.parts = {make_truth(RatTruth{Rational(0)}), make_truth(RatTruth{Rational(0)})};
    } else {
      Rational y(1, pow2(u->collapse_slot + 1));
      t.parts = {make_truth(RatTruth{u->point * y}), make_truth(RatTruth{y})};
    }
    return Instance(with_truth(tgt.name, make_truth(t)));
  };
  return r;
}

inline Reduction depcut_to_aouc_cantor() {
  Reduction r;
  r.id = "depcut_to_aouc_cantor";
  r.source = depcut();
  r.target = aouc_cantor();
  r.forward = [](const Instance& src, long) {
    Name p = src.name;
    auto view = [p](long l) -> LevelRec {
      long n = -1;
      for (long i = 0; i < l && n < 0; ++i)
        if (p.bit(i) == 1) n = i;
      if (n < 0) return LevelRec{};
      LevelRec rec;
      rec.full = false;
      for (long j = 0; j < l; ++j) rec.node.push_back(p.bit(n + 1 + j));
      return rec;
    };
    return Instance(aou_tree_from_levels(view));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto* c = truth_as<CutTruth>(src.name.truth());
    if (!c) throw std::runtime_error("depcut_to_aouc_cantor: source carries no cut truth");
    auto t = c->stage < 0 ? make_truth(TreeTruth{})
                          : make_truth(TreeTruth{false, c->stage + 1, c->tail});
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline Reduction aouc_cantor_to_depcut() {
  Reduction r;
  r.id = "aouc_cantor_to_depcut";
  r.source = aouc_cantor();
  r.target = depcut();
  r.forward = [](const Instance& src, long) {
    auto lv = level_getter(src.name);
    auto gen = [lv](const Int& pos) {
      long p = pos.convert_to<long>();
      long L = -1;
      for (long l = 1; l <= p + 1 && L < 0; ++l)
        if (!lv(l).full) L = l;
      if (L < 0 || p < L - 1) return 0;
      if (p == L - 1) return 1;
      long i = p - L;
      return lv(std::max(L, i + 1)).node[static_cast<std::size_t>(i)];
    };
    return Instance(Name::from_bits(gen, "cut"));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto* t = truth_as<TreeTruth>(src.name.truth());
    if (!t) throw std::runtime_error("aouc_cantor_to_depcut: source carries no tree truth");
    auto ct = t->is_full ? make_truth(CutTruth{})
                         : make_truth(CutTruth{t->collapse_level - 1, t->path});
    return Instance(with_truth(tgt.name, ct));
  };
  return r;
}

inline Reduction aouc_unit_to_aouc_cantor() {
  Reduction r;
  r.id = "aouc_unit_to_aouc_cantor";
  r.source = aouc_unit();
  r.target = aouc_cantor();
  r.forward = [](const Instance& src, long) {
    auto mill = std::make_shared<detail::UnitPathMill>();
    mill->bv = ball_getter(src.name);
    auto view = [mill](long l) -> LevelRec {
      if (mill->full_at(l)) return LevelRec{};
      LevelRec rec;
      rec.full = false;
      for (long j = 0; j < l; ++j) rec.node.push_back(mill->path_bit(j));
      return rec;
    };
    return Instance(aou_tree_from_levels(view));
  };
  r.backward = [](const Instance&, const Name& ans, long) {
    Name path = ans;
    auto fn = [path](long i) { return detail::overlap_decode(path, std::max(0L, i)); };
    return real_name_from_approx(fn, nullptr);
  };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto* u = truth_as<UnitSetTruth>(src.name.truth());
    if (!u) throw std::runtime_error("aouc_unit_to_aouc_cantor: source carries no set truth");
    std::shared_ptr<const Truth> t;
    if (u->is_all) {
      t = make_truth(TreeTruth{});
    } else {
      auto mill = std::make_shared<detail::UnitPathMill>();
      mill->bv = ball_getter(src.name);
      auto path = StreamDesc::opaque(
          [mill](const Int& pos) { return mill->path_bit(pos.convert_to<long>()); });
      t = make_truth(TreeTruth{false, detail::overlap_collapse_level(u->collapse_slot), path});
    }
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline Reduction cfin_to_llpo_power(long bound = 3) {
  if (bound < 1) throw std::invalid_argument("cfin_to_llpo_power: bound must be at least 1");
  std::vector<detail::SplitNode> nodes;
  detail::split_ranges(0, bound + 1, nodes);
  const long n_nodes = static_cast<long>(nodes.size());

  Reduction r;
  r.id = "cfin_to_llpo_power";
  r.source = cfin(bound);
  r.target = power(llpo(), n_nodes);
  r.forward = [nodes, bound](const Instance& src, long) {
    Name f = src.name;
    std::vector<Name> streams;
    for (const detail::SplitNode& nd : nodes) {
      auto gen = [f, bound, nd](const Int& pos) {
        long p = pos.convert_to<long>();
        auto ex = detail::excluded_by(f, bound, p / 2);
        long lo = p % 2 ? nd.mid : nd.lo;
        long hi = p % 2 ? nd.hi : nd.mid;
        for (long k = lo; k < hi; ++k)
          if (!ex.count(k)) return 0;
        return 1;
      };
      streams.push_back(Name::from_bits(gen, "cantor"));
    }
    return Instance(tuple(streams));
  };
  r.backward = [nodes, bound](const Instance&, const Name& ans, long) {
    auto parts = untuple(ans, nodes.size());
    long lo = 0, hi = bound + 1;
    while (hi - lo >= 2) {
      std::size_t idx = detail::node_index(nodes, lo, hi);
      long pick = blind_nat(parts[idx]);
      if (pick == 1)
        hi = nodes[idx].mid;
      else
        lo = nodes[idx].mid;
    }
    return encode_nat(lo);
  };
  r.annotate = [nodes, bound](const Instance& src, Instance tgt, long) {
    auto* st = truth_as<SetTruth>(src.name.truth());
    if (!st) throw std::runtime_error("cfin_to_llpo_power: source carries no set truth");
    const long cap = (bound + 1) * (2 * bound + 6) + 64;
    auto dead_stage = [&](long lo, long hi) -> std::optional<long> {
      for (long k = lo; k < hi; ++k)
        if (st->elems.count(k)) return std::nullopt;
      for (long s = 0; s <= cap; ++s) {
        auto ex = detail::excluded_by(src.name, bound, s);
        bool all = true;
        for (long k = lo; k < hi; ++k)
          if (!ex.count(k)) all = false;
        if (all) return s;
      }
      throw std::logic_error("cfin_to_llpo_power: a dead range never finished excluding");
    };
    TupleTruth t;
    for (const detail::SplitNode& nd : nodes) {
      auto sl = dead_stage(nd.lo, nd.mid), sr = dead_stage(nd.mid, nd.hi);
      long pos = -1;
      if (sl) pos = 2 * *sl;
      if (sr) pos = pos < 0 ? 2 * *sr + 1 : std::min(pos, 2 * *sr + 1);
      if (pos < 0)
        t.parts.push_back(make_truth(StreamTruth{StreamDesc::zeros()}));
      else
        t.parts.push_back(
            make_truth(StreamTruth{StreamDesc::prefix(std::string(pos, '0') + "1")}));
    }
    return Instance(with_truth(tgt.name, make_truth(t)));
  };
  return r;
}

inline Reduction llpo_to_llpo_real() {
  Reduction r;
  r.id = "llpo_to_llpo_real";
  r.source = llpo();
  r.target = llpo_real();
  r.forward = [](const Instance& src, long) {
    Name p = src.name;
    auto part = [p](int parity) {
      return [p, parity](long i) -> Rational {
        for (long u = 0; u <= i + 2; ++u)
          if (p.bit(u) == 1) return u % 2 == parity ? Rational(1, pow2(u)) : Rational(0);
        return Rational(0);
      };
    };
    return Instance(
        tuple({real_name_from_approx(part(1), nullptr), real_name_from_approx(part(0), nullptr)}));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto fo = first_one(src.name);
    Rational x(0), y(0);
    if (fo) (*fo % 2 == 1 ? x : y) = Rational(1, pow2(*fo));
    TupleTruth t;
    t.parts = {make_truth(RatTruth{x}), make_truth(RatTruth{y})};
    return Instance(with_truth(tgt.name, make_truth(t)));
  };
  return r;
}

inline Reduction llpo_real_to_llpo() {
  Reduction r;
  r.id = "llpo_real_to_llpo";
  r.source = llpo_real();
  r.target = llpo();
  r.forward = [](const Instance& src, long) {
    auto [xn, yn] = detail::blind_parts(src);
    auto ax = approx_getter(xn), ay = approx_getter(yn);
    auto gen = [ax, ay](const Int& pos) {
      long p = pos.convert_to<long>();
      long s = p / 2;
      const auto& ap = p % 2 ? ax : ay;
      for (long u = 0; u <= s; ++u)
        if (detail::nonzero_at(ap, u)) return 1;
      return 0;
    };
    return Instance(Name::from_bits(gen, "cantor"));
  };
  r.backward = [](const Instance&, const Name& ans, long) { return ans; };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto [x, y] = detail::rat_pair_of(src, "llpo_real_to_llpo");
    auto parts = untuple(src.name, 2);
    std::optional<long> px, py;
    if (x != 0) px = detail::first_nonzero_stage(approx_getter(parts[0]), 1L << 15);
    if (y != 0) py = detail::first_nonzero_stage(approx_getter(parts[1]), 1L << 15);
    if ((x != 0 && !px) || (y != 0 && !py))
      throw std::logic_error("llpo_real_to_llpo: nonzero coordinate never witnessed");
    long pos = -1;
    if (py) pos = 2 * *py;
    if (px) pos = pos < 0 ? 2 * *px + 1 : std::min(pos, 2 * *px + 1);
    auto t = pos < 0 ? make_truth(StreamTruth{StreamDesc::zeros()})
                     : make_truth(StreamTruth{StreamDesc::prefix(std::string(pos, '0') + "1")});
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline Reduction llpo_to_aouc_unit() {
  Reduction r;
  r.id = "llpo_to_aouc_unit";
  r.source = llpo();
  r.target = aouc_unit();
  r.forward = [](const Instance& src, long) {
    Name p = src.name;
    auto view = [p](long s) -> std::optional<Ball> {
      long n = -1;
      for (long u = 0; u <= s && n < 0; ++u)
        if (p.bit(u) == 1) n = u;
      if (n < 0) return std::nullopt;
      Rational pt(n % 2 == 0 ? 0 : 1);
      return shrink_ball(pt, Rational(0), s - n);
    };
    return Instance(closed_unit_from_balls(view));
  };
  r.backward = [](const Instance&, const Name& ans, long) {
    return encode_nat(approx_getter(ans)(2) > Rational(1, 2) ? 1 : 0);
  };
  r.annotate = [](const Instance& src, Instance tgt, long) {
    auto fo = first_one(src.name);
    auto t = !fo ? make_truth(UnitSetTruth{})
                 : make_truth(UnitSetTruth{false, Rational(*fo % 2 == 0 ? 0 : 1), *fo});
    return Instance(with_truth(tgt.name, t));
  };
  return r;
}

inline std::vector<Reduction> reduction_library() {
  return {ubrdiv_to_lpo(),          lpo_to_ubrdiv(),           rdiv_to_aouc_unit(),
          aouc_unit_to_rdiv(),      depcut_to_aouc_cantor(),   aouc_cantor_to_depcut(),
          aouc_unit_to_aouc_cantor(), cfin_to_llpo_power(),    llpo_to_llpo_real(),
          llpo_real_to_llpo(),      llpo_to_aouc_unit()};
}

inline Reduction reduction_by_id(const std::string& id) {
  for (Reduction& red : reduction_library())
    if (red.id == id) return red;
  std::string known;
  for (const Reduction& red : reduction_library()) known += (known.empty() ? "" : ", ") + red.id;
  throw std::invalid_argument("unknown reduction '" + id + "'; known: " + known);
}

/// Handcrafted edge instances for the reduction's source problem, then `n`
/// generated ones.
inline std::vector<Instance> reduction_corpus(const Reduction& red, long n, std::uint64_t seed) {
  std::vector<Instance> out;
  const std::string& sid = red.source.id;
  if (sid == "lpo" || sid == "llpo") {
    out.push_back(stream_instance(StreamDesc::zeros()));
    out.push_back(stream_instance(StreamDesc::prefix("1")));
    out.push_back(stream_instance(StreamDesc::prefix("00000000000000000000001")));
  } else if (sid == "llpo_real") {
    out.push_back(real_pair_instance(Rational(0), Rational(0)));
    out.push_back(real_pair_instance(Rational(0), rat_parse("7/3")));
    out.push_back(real_pair_instance(rat_parse("-2/5"), Rational(0)));
  } else if (sid == "rdiv") {
    out.push_back(rdiv_instance(rat_parse("3/10"), Rational(0)));
    out.push_back(rdiv_instance(Rational(1, pow2(41)), Rational(1, pow2(40))));
    out.push_back(rdiv_instance(Rational(1), Rational(2)));
    out.push_back(rdiv_instance(Rational(3), Rational(3)));
  } else if (sid == "ubrdiv") {
    out.push_back(real_pair_instance(rat_parse("5"), Rational(0)));
    out.push_back(real_pair_instance(rat_parse("-3"), Rational(2)));
    out.push_back(real_pair_instance(Rational(0), Rational(0)));
  } else if (sid == "aouc_unit") {
    out.push_back(unit_instance_full());
    out.push_back(unit_instance_point(rat_parse("1/3"), 0));
    out.push_back(unit_instance_point(rat_parse("5/8"), 32));
  } else if (sid == "aouc_cantor") {
    out.push_back(tree_instance_full());
    out.push_back(tree_instance_path(1, StreamDesc::periodic("10")));
    out.push_back(tree_instance_path(13, StreamDesc::seeded(5)));
  } else if (sid.rfind("cfin:", 0) == 0) {
    long bound = std::stol(sid.substr(5));
    std::set<long> all;
    for (long k = 0; k <= bound; ++k) all.insert(k);
    out.push_back(finset_instance(bound, all));
    out.push_back(finset_instance(bound, {bound}));
    out.push_back(finset_instance(bound, {0, bound}));
  } else if (sid == "depcut") {
    out.push_back(cut_instance(-1, StreamDesc::zeros()));
    out.push_back(cut_instance(0, StreamDesc::periodic("01")));
    out.push_back(cut_instance(13, StreamDesc::seeded(9)));
  }
  for (Instance& inst : seeded_corpus(red.source, n, seed)) out.push_back(std::move(inst));
  return out;
}

}  // namespace t2k
