#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "t2kit/prng.hpp"
#include "t2kit/spaces.hpp"

// Problems as first-class values. A Problem bundles a multi-valued map on
// represented spaces with everything needed to exercise it: a reference
// solver, a judge for candidate answers at a given depth, an enumerator of
// distinct valid answers (for adversarial replay), an instance well-formedness
// check, and a deterministic instance generator keyed by (spec, seed).
//
// Solvers and judges run oracle-side: they may consult the ground truth
// carried by instance names, which is exactly the information a reduction
// under test is denied. Depth d pins the judging tolerance: real-valued
// answers must land within 2^-d of the solution set (plus 2^-(d+1) estimation
// slack when the candidate carries no exact value), bit-stream answers must
// match a solution on the first d bits, and discrete answers are exact.

namespace t2k {

struct Verdict {
  bool ok = true;
  std::string witness;

  static Verdict pass() { return {}; }
  static Verdict fail(std::string w) { return {false, std::move(w)}; }
};

/// One oracle stage of a star-shaped instance. apply computes the next inner
/// instance from the answers of the earlier stages, reading them only through
/// bits and views (never through ground truths), so it stays runnable on the
/// blind side of the harness. truth_of is the oracle-side channel: it supplies
/// the ground truth of the produced instance and is stripped before an
/// instance is handed to a reduction.
struct StarLink {
  std::function<Name(const std::vector<Name>&)> apply;
  std::function<std::shared_ptr<const Truth>(const std::vector<Name>&)> truth_of;
};

struct Instance {
  Name name;
  std::vector<StarLink> links;

  Instance() = default;
  explicit Instance(Name n) : name(std::move(n)) {}
  Instance(Name n, std::vector<StarLink> l) : name(std::move(n)), links(std::move(l)) {}
};

struct Problem {
  std::string id;
  std::string instance_space;
  std::string answer_space;
  std::function<Name(const Instance&)> solve;
  std::function<Verdict(const Instance&, const Name&, long depth)> validate;
  std::function<std::vector<Name>(const Instance&, long count, std::uint64_t seed)> sample;
  std::function<Verdict(const Instance&, long depth)> check_instance;
  std::function<Instance(const json&, std::uint64_t seed)> generate;
};

// --- reading answers back out of names ---

inline long nat_value(const Name& n, long cap = 1L << 16) {
  if (auto* t = truth_as<NatTruth>(n.truth())) return t->value.convert_to<long>();
  for (long i = 0; i <= cap; ++i)
    if (n.bit(i) == 1) return i;
  throw std::runtime_error("nat_value: no terminator within " + std::to_string(cap) +
                           " positions");
}

struct RealEst {
  bool exact = false;
  Rational v;
};

inline RealEst real_value(const Name& n, long prec) {
  if (auto* t = truth_as<RatTruth>(n.truth())) return {true, t->value};
  if (n.has_approx()) return {false, n.approx(prec)};
  return {false, bit_approx_view(n)(prec)};
}

inline std::optional<bool> stream_known_zero(const StreamDesc& s) {
  if (s.spec == "zeros") return true;
  if (s.spec == "ones") return false;
  if (s.spec.rfind("prefix:", 0) == 0 || s.spec.rfind("periodic:", 0) == 0)
    return s.spec.find('1', s.spec.find(':') + 1) == std::string::npos;
  return std::nullopt;
}

/// Position of the first 1, or nullopt when the stream is certified all-zero.
/// Throws when neither a 1 within cap nor a certificate is available.
inline std::optional<long> first_one(const Name& n, long cap = 1L << 15) {
  if (auto* st = truth_as<StreamTruth>(n.truth())) {
    const std::string& sp = st->s.spec;
    auto colon = sp.find(':');
    if (sp == "zeros") return std::nullopt;
    if (sp == "ones") return 0;
    if (sp.rfind("prefix:", 0) == 0 || sp.rfind("periodic:", 0) == 0) {
      auto pos = sp.find('1', colon + 1);
      if (pos == std::string::npos) return std::nullopt;
      return static_cast<long>(pos - colon - 1);
    }
  }
  for (long i = 0; i < cap; ++i)
    if (n.bit(i) == 1) return i;
  throw std::runtime_error("stream: no 1 within " + std::to_string(cap) +
                           " positions and zero-ness is not certified");
}

inline std::set<long> finset_elems(const Name& n, long bound, long scan_pad = 64) {
  if (auto* st = truth_as<SetTruth>(n.truth())) {
    if (st->bound != bound)
      throw std::runtime_error("finset: ground truth bound " + std::to_string(st->bound) +
                               " does not match expected " + std::to_string(bound));
    return st->elems;
  }
  long scan = (bound + 1) * (2 * bound + 6) + scan_pad;
  std::set<long> excluded;
  long last_zero = -1;
  for (long p = 0; p <= scan; ++p) {
    if (n.bit(p) == 0) {
      if (last_zero >= 0) {
        long k = p - last_zero - 1;
        if (k <= bound) excluded.insert(k);
      }
      last_zero = p;
    }
  }
  std::set<long> elems;
  for (long k = 0; k <= bound; ++k)
    if (!excluded.count(k)) elems.insert(k);
  return elems;
}

// --- instance construction ---

inline Instance stream_instance(const StreamDesc& s) { return Instance(encode_cantor(s)); }

inline Instance real_pair_instance(const Rational& x, const Rational& y) {
  return Instance(tuple({encode_real(x), encode_real(y)}));
}

inline Instance rdiv_instance(const Rational& x, const Rational& y) {
  return real_pair_instance(x, y);
}

inline Instance finset_instance(long bound, const std::set<long>& elems) {
  return Instance(encode_finset(bound, elems));
}

inline Instance unit_instance_full() {
  return Instance(encode_closed_unit(UnitSetTruth{true, Rational(0), -1}));
}

inline Instance unit_instance_point(const Rational& x, long slot) {
  return Instance(encode_closed_unit(UnitSetTruth{false, x, slot}));
}

inline Instance tree_instance_full() { return Instance(encode_aou_tree(TreeTruth{})); }

inline Instance tree_instance_path(long level, const StreamDesc& path) {
  return Instance(encode_aou_tree(TreeTruth{false, level, path}));
}

inline Instance cut_instance(long stage, const StreamDesc& tail) {
  return Instance(encode_cut(CutTruth{stage, tail}));
}

/// A name of x whose approximant schedule is offset by c grid steps at every
/// depth, so distinct c give bitwise-distinct names of the same point.
inline Name real_name_scheduled(const Rational& x, long c) {
  if (c == 0) return encode_real(x);
  return real_name_from_approx(
      [x, c](long i) { return dyadic_round(x + Rational(Int(c), pow2(i + 5)), i + 5); },
      make_truth(RatTruth{x}));
}

// --- judging helpers ---

namespace detail {

inline Rational inv_pow2(long k) { return Rational(1, pow2(k)); }

inline Verdict real_answer_near(const Name& cand, long depth,
                                const std::function<Rational(const Rational&)>& dist,
                                const std::string& who) {
  RealEst est = real_value(cand, depth + 1);
  Rational tol = inv_pow2(depth);
  if (!est.exact) tol += inv_pow2(depth + 1);
  Rational d = dist(est.v);
  if (d <= tol) return Verdict::pass();
  return Verdict::fail(who + ": estimate " + rat_str(est.v) + " is " + rat_str(d) +
                       " from the solution set at depth " + std::to_string(depth));
}

inline Rational dist_to_unit(const Rational& v) {
  if (v < 0) return -v;
  if (v > 1) return v - Rational(1);
  return Rational(0);
}

inline Verdict prefix_matches(const Name& cand, const StreamDesc& want, long depth,
                              const std::string& who) {
  for (long i = 0; i < depth; ++i)
    if (cand.bit(i) != want.bit(i))
      return Verdict::fail(who + ": bit " + std::to_string(i) +
                           " disagrees with the unique solution");
  return Verdict::pass();
}

inline std::pair<Rational, Rational> rat_pair_of(const Instance& inst, const char* who) {
  auto parts = untuple(inst.name, 2);
  auto* xt = truth_as<RatTruth>(parts[0].truth());
  auto* yt = truth_as<RatTruth>(parts[1].truth());
  if (!xt || !yt)
    throw std::runtime_error(std::string(who) + ": instance carries no rational ground truth");
  return {xt->value, yt->value};
}

inline std::set<long> llpo_valid(const std::optional<long>& fo) {
  if (!fo) return {0, 1};
  return {*fo % 2 == 0 ? 0L : 1L};
}

inline std::set<long> llpo_real_valid(const Rational& x, const Rational& y) {
  std::set<long> v;
  if (x == 0) v.insert(0);
  if (y == 0) v.insert(1);
  if (x != 0 && y != 0) v = {0, 1};
  return v;
}

inline Verdict nat_answer_in(const std::set<long>& valid, const Name& cand,
                             const std::string& who) {
  long v = nat_value(cand);
  if (valid.count(v)) return Verdict::pass();
  std::string opts;
  for (long w : valid) opts += (opts.empty() ? "" : ", ") + std::to_string(w);
  return Verdict::fail(who + ": answer " + std::to_string(v) + " is not among {" + opts + "}");
}

inline std::vector<Name> nat_answers(const std::set<long>& valid, long count) {
  std::vector<Name> out;
  for (long v : valid) {
    if (static_cast<long>(out.size()) >= count) break;
    out.push_back(encode_nat(v));
  }
  return out;
}

inline Rational unit_rat(Prng& g) {
  std::uint64_t q = 1 + g.below(64);
  std::uint64_t p = g.below(q + 1);
  return Rational(Int(p), Int(q));
}

inline Rational signed_rat(Prng& g, bool allow_zero) {
  long p = static_cast<long>(g.below(33));
  if (!allow_zero && p == 0) p = 1;
  long q = 1 + static_cast<long>(g.below(16));
  Rational r = Rational(Int(p), Int(q));
  return g.flip() ? -r : r;
}

inline std::string random_bits(Prng& g, long len) {
  std::string out;
  out.reserve(static_cast<std::size_t>(len));
  for (long i = 0; i < len; ++i) out.push_back(g.flip() ? '1' : '0');
  return out;
}

/// Explicit finite prefix with a forced 1 at position n, so zero-ness of the
/// generated stream stays certified by its description.
inline StreamDesc stream_with_first_one(Prng& g, long n) {
  std::string bits(static_cast<std::size_t>(n), '0');
  bits += '1';
  bits += random_bits(g, 16);
  return StreamDesc::prefix(bits);
}

inline std::vector<Name> cantor_answers(const StreamDesc& unique, bool any, long count,
                                        std::uint64_t seed) {
  if (!any) return {encode_cantor(unique)};
  std::vector<Name> out;
  out.push_back(encode_cantor(StreamDesc::zeros()));
  if (count > 1) out.push_back(encode_cantor(StreamDesc::ones()));
  Prng g(seed ^ 0x7c159e3779b97f4aULL);
  while (static_cast<long>(out.size()) < count)
    out.push_back(encode_cantor(StreamDesc::prefix(random_bits(g, 48))));
  return out;
}

inline std::vector<Name> real_answers_at(const Rational& point, long count) {
  static const long kSchedules[] = {0, 1, -1, 2, -2, 3, -3};
  std::vector<Name> out;
  for (long c : kSchedules) {
    if (static_cast<long>(out.size()) >= count) break;
    out.push_back(real_name_scheduled(point, c));
  }
  return out;
}

inline std::vector<Name> unit_interval_answers(long count, std::uint64_t seed) {
  std::vector<Name> out;
  out.push_back(encode_real(Rational(0)));
  if (count > 1) out.push_back(encode_real(Rational(1)));
  Prng g(seed ^ 0x2545f4914f6cdd1dULL);
  while (static_cast<long>(out.size()) < count) out.push_back(encode_real(unit_rat(g)));
  return out;
}

template <class TruthT>
const TruthT* instance_truth(const Instance& inst, const char* who) {
  auto* t = truth_as<TruthT>(inst.name.truth());
  if (!t) throw std::runtime_error(std::string(who) + ": instance carries no ground truth");
  return t;
}

inline Verdict guarded(const std::function<Verdict()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return Verdict::fail(e.what());
  }
}

}  // namespace detail

// --- the problem library ---

inline Problem lpo() {
  Problem pr;
  pr.id = "lpo";
  pr.instance_space = "cantor";
  pr.answer_space = "nat";
  pr.solve = [](const Instance& inst) {
    return encode_nat(first_one(inst.name) ? 0 : 1);
  };
  pr.validate = [](const Instance& inst, const Name& cand, long) {
    return detail::guarded([&] {
      long want = first_one(inst.name) ? 0 : 1;
      return detail::nat_answer_in({want}, cand, "lpo");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t) {
    return detail::nat_answers({first_one(inst.name) ? 0L : 1L}, count);
  };
  pr.check_instance = [](const Instance&, long) { return Verdict::pass(); };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("stream"))
      return stream_instance(StreamDesc::parse(spec.at("stream").get<std::string>()));
    Prng g(seed ^ 0x1c69b3f74ac4fb05ULL);
    if (g.below(3) == 0) return stream_instance(StreamDesc::zeros());
    return stream_instance(detail::stream_with_first_one(g, static_cast<long>(g.below(24))));
  };
  return pr;
}

inline Problem llpo() {
  Problem pr;
  pr.id = "llpo";
  pr.instance_space = "cantor";
  pr.answer_space = "nat";
  pr.solve = [](const Instance& inst) {
    auto fo = first_one(inst.name);
    return encode_nat(!fo || *fo % 2 == 0 ? 0 : 1);
  };
  pr.validate = [](const Instance& inst, const Name& cand, long) {
    return detail::guarded([&] {
      return detail::nat_answer_in(detail::llpo_valid(first_one(inst.name)), cand, "llpo");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t) {
    return detail::nat_answers(detail::llpo_valid(first_one(inst.name)), count);
  };
  pr.check_instance = [](const Instance&, long) { return Verdict::pass(); };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("stream"))
      return stream_instance(StreamDesc::parse(spec.at("stream").get<std::string>()));
    Prng g(seed ^ 0x452821e638d01377ULL);
    if (g.below(3) == 0) return stream_instance(StreamDesc::zeros());
    return stream_instance(detail::stream_with_first_one(g, static_cast<long>(g.below(24))));
  };
  return pr;
}

inline Problem llpo_real() {
  Problem pr;
  pr.id = "llpo_real";
  pr.instance_space = "tuple(real,real)";
  pr.answer_space = "nat";
  pr.solve = [](const Instance& inst) {
    auto [x, y] = detail::rat_pair_of(inst, "llpo_real");
    return encode_nat(x == 0 ? 0 : (y == 0 ? 1 : 0));
  };
  pr.validate = [](const Instance& inst, const Name& cand, long) {
    return detail::guarded([&] {
      auto [x, y] = detail::rat_pair_of(inst, "llpo_real");
      return detail::nat_answer_in(detail::llpo_real_valid(x, y), cand, "llpo_real");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t) {
    auto [x, y] = detail::rat_pair_of(inst, "llpo_real");
    return detail::nat_answers(detail::llpo_real_valid(x, y), count);
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      detail::rat_pair_of(inst, "llpo_real");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("x"))
      return real_pair_instance(rat_parse(spec.at("x").get<std::string>()),
                                rat_parse(spec.at("y").get<std::string>()));
    Prng g(seed ^ 0xbe5466cf34e90c6cULL);
    switch (g.below(4)) {
      case 0: return real_pair_instance(Rational(0), detail::signed_rat(g, false));
      case 1: return real_pair_instance(detail::signed_rat(g, false), Rational(0));
      case 2: return real_pair_instance(detail::signed_rat(g, false), detail::signed_rat(g, false));
      default: return real_pair_instance(Rational(0), Rational(0));
    }
  };
  return pr;
}

inline Problem cfin(long bound) {
  if (bound < 0) throw std::invalid_argument("cfin: negative bound");
  Problem pr;
  pr.id = "cfin:" + std::to_string(bound);
  pr.instance_space = "finset:" + std::to_string(bound);
  pr.answer_space = "nat";
  pr.solve = [bound](const Instance& inst) {
    auto elems = finset_elems(inst.name, bound);
    if (elems.empty()) throw std::domain_error("cfin: empty set has no choice");
    return encode_nat(*elems.begin());
  };
  pr.validate = [bound](const Instance& inst, const Name& cand, long) {
    return detail::guarded([&] {
      return detail::nat_answer_in(finset_elems(inst.name, bound), cand, "cfin");
    });
  };
  pr.sample = [bound](const Instance& inst, long count, std::uint64_t) {
    return detail::nat_answers(finset_elems(inst.name, bound), count);
  };
  pr.check_instance = [bound](const Instance& inst, long) {
    return detail::guarded([&] {
      auto elems = finset_elems(inst.name, bound);
      if (elems.empty()) return Verdict::fail("cfin: empty set");
      if (*elems.rbegin() > bound)
        return Verdict::fail("cfin: element " + std::to_string(*elems.rbegin()) +
                             " exceeds bound " + std::to_string(bound));
      return Verdict::pass();
    });
  };
  pr.generate = [bound](const json& spec, std::uint64_t seed) {
    if (spec.contains("elems")) {
      std::set<long> es;
      for (const auto& e : spec.at("elems")) es.insert(e.get<long>());
      return finset_instance(bound, es);
    }
    Prng g(seed ^ 0xc0ac29b7c97c50ddULL);
    std::set<long> es;
    for (long k = 0; k <= bound; ++k)
      if (g.flip()) es.insert(k);
    if (es.empty()) es.insert(static_cast<long>(g.below(bound + 1)));
    return finset_instance(bound, es);
  };
  return pr;
}

inline Problem rdiv() {
  Problem pr;
  pr.id = "rdiv";
  pr.instance_space = "tuple(real,real)";
  pr.answer_space = "real";
  pr.solve = [](const Instance& inst) {
    auto [x, y] = detail::rat_pair_of(inst, "rdiv");
    return encode_real(y == 0 ? Rational(0) : Rational(x / y));
  };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    return detail::guarded([&] {
      auto [x, y] = detail::rat_pair_of(inst, "rdiv");
      if (y == 0)
        return detail::real_answer_near(cand, depth, detail::dist_to_unit, "rdiv");
      Rational q = x / y;
      return detail::real_answer_near(
          cand, depth, [q](const Rational& v) { return Rational(abs(Rational(v - q))); },
          "rdiv");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t seed) {
    auto [x, y] = detail::rat_pair_of(inst, "rdiv");
    if (y == 0) return detail::unit_interval_answers(count, seed);
    return detail::real_answers_at(x / y, count);
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      auto [x, y] = detail::rat_pair_of(inst, "rdiv");
      if (y == 0) return Verdict::pass();
      if (x < 0 || y < 0 || x > y)
        return Verdict::fail("rdiv: instance outside the convention 0 <= x <= y");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("x"))
      return rdiv_instance(rat_parse(spec.at("x").get<std::string>()),
                           rat_parse(spec.at("y").get<std::string>()));
    std::string profile = spec.value("profile", "mixed");
    Prng g(seed ^ 0x3f84d5b5b5470917ULL);
    long pick = profile == "zero_den"   ? 0
                : profile == "tiny_den" ? 1
                                        : static_cast<long>(g.below(5));
    if (pick == 0) return rdiv_instance(detail::unit_rat(g), Rational(0));
    if (pick == 1) {
      Rational y(1, pow2(20 + static_cast<long>(g.below(30))));
      return rdiv_instance(y * detail::unit_rat(g), y);
    }
    Rational y(Int(1 + g.below(64)), Int(1 + g.below(16)));
    Rational u = pick == 2 ? Rational(g.below(2)) : detail::unit_rat(g);
    return rdiv_instance(y * u, y);
  };
  return pr;
}

inline Problem ubrdiv() {
  Problem pr;
  pr.id = "ubrdiv";
  pr.instance_space = "tuple(real,real)";
  pr.answer_space = "real";
  pr.solve = [](const Instance& inst) {
    auto [x, y] = detail::rat_pair_of(inst, "ubrdiv");
    return encode_real(y == 0 ? Rational(0) : Rational(x / y));
  };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    return detail::guarded([&] {
      auto [x, y] = detail::rat_pair_of(inst, "ubrdiv");
      if (y == 0)
        return detail::real_answer_near(
            cand, depth, [](const Rational&) { return Rational(0); }, "ubrdiv");
      Rational q = x / y;
      return detail::real_answer_near(
          cand, depth, [q](const Rational& v) { return Rational(abs(Rational(v - q))); },
          "ubrdiv");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t seed) {
    auto [x, y] = detail::rat_pair_of(inst, "ubrdiv");
    if (y != 0) return detail::real_answers_at(x / y, count);
    std::vector<Name> out;
    out.push_back(encode_real(Rational(0)));
    if (count > 1) out.push_back(encode_real(Rational(1)));
    if (count > 2) out.push_back(encode_real(Rational(-1)));
    Prng g(seed ^ 0x94d049bb133111ebULL);
    while (static_cast<long>(out.size()) < count)
      out.push_back(encode_real(detail::signed_rat(g, true)));
    return out;
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      detail::rat_pair_of(inst, "ubrdiv");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("x"))
      return real_pair_instance(rat_parse(spec.at("x").get<std::string>()),
                                rat_parse(spec.at("y").get<std::string>()));
    Prng g(seed ^ 0xd3b5a8f2c64e9a71ULL);
    if (g.below(5) == 0) return real_pair_instance(detail::signed_rat(g, true), Rational(0));
    return real_pair_instance(detail::signed_rat(g, true), detail::signed_rat(g, false));
  };
  return pr;
}

inline Problem aouc_unit() {
  Problem pr;
  pr.id = "aouc_unit";
  pr.instance_space = "closed_unit";
  pr.answer_space = "real";
  pr.solve = [](const Instance& inst) {
    auto* t = detail::instance_truth<UnitSetTruth>(inst, "aouc_unit");
    return encode_real(t->is_all ? Rational(0) : t->point);
  };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    return detail::guarded([&] {
      auto* t = detail::instance_truth<UnitSetTruth>(inst, "aouc_unit");
      if (t->is_all)
        return detail::real_answer_near(cand, depth, detail::dist_to_unit, "aouc_unit");
      Rational p = t->point;
      return detail::real_answer_near(
          cand, depth, [p](const Rational& v) { return Rational(abs(Rational(v - p))); },
          "aouc_unit");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t seed) {
    auto* t = detail::instance_truth<UnitSetTruth>(inst, "aouc_unit");
    if (t->is_all) return detail::unit_interval_answers(count, seed);
    return detail::real_answers_at(t->point, count);
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      auto* t = detail::instance_truth<UnitSetTruth>(inst, "aouc_unit");
      if (t->is_all) return Verdict::pass();
      if (t->point < 0 || t->point > 1)
        return Verdict::fail("aouc_unit: point " + rat_str(t->point) + " outside [0,1]");
      if (t->collapse_slot < 0) return Verdict::fail("aouc_unit: singleton without a collapse slot");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.value("full", false)) return unit_instance_full();
    if (spec.contains("point"))
      return unit_instance_point(rat_parse(spec.at("point").get<std::string>()),
                                 spec.value("collapse", 0L));
    Prng g(seed ^ 0xa0761d6478bd642fULL);
    if (g.below(4) == 0) return unit_instance_full();
    return unit_instance_point(detail::unit_rat(g), static_cast<long>(g.below(33)));
  };
  return pr;
}

inline Problem aouc_cantor() {
  Problem pr;
  pr.id = "aouc_cantor";
  pr.instance_space = "aou_tree";
  pr.answer_space = "cantor";
  pr.solve = [](const Instance& inst) {
    auto* t = detail::instance_truth<TreeTruth>(inst, "aouc_cantor");
    return encode_cantor(t->is_full ? StreamDesc::zeros() : t->path);
  };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    return detail::guarded([&] {
      auto* t = detail::instance_truth<TreeTruth>(inst, "aouc_cantor");
      if (t->is_full) return Verdict::pass();
      return detail::prefix_matches(cand, t->path, depth, "aouc_cantor");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t seed) {
    auto* t = detail::instance_truth<TreeTruth>(inst, "aouc_cantor");
    return detail::cantor_answers(t->path, t->is_full, count, seed);
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      auto* t = detail::instance_truth<TreeTruth>(inst, "aouc_cantor");
      if (!t->is_full && t->collapse_level < 0)
        return Verdict::fail("aouc_cantor: singleton without a collapse level");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.value("full", false)) return tree_instance_full();
    if (spec.contains("path"))
      return tree_instance_path(spec.value("collapse_level", 1L),
                                StreamDesc::parse(spec.at("path").get<std::string>()));
    Prng g(seed ^ 0xe7037ed1a0b428dbULL);
    if (g.below(4) == 0) return tree_instance_full();
    long level = 1 + static_cast<long>(g.below(10));
    return tree_instance_path(level, StreamDesc::prefix(detail::random_bits(g, 24)));
  };
  return pr;
}

inline Problem depcut() {
  Problem pr;
  pr.id = "depcut";
  pr.instance_space = "cut";
  pr.answer_space = "cantor";
  pr.solve = [](const Instance& inst) {
    auto* t = detail::instance_truth<CutTruth>(inst, "depcut");
    return encode_cantor(t->stage < 0 ? StreamDesc::zeros() : t->tail);
  };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    return detail::guarded([&] {
      auto* t = detail::instance_truth<CutTruth>(inst, "depcut");
      if (t->stage < 0) return Verdict::pass();
      return detail::prefix_matches(cand, t->tail, depth, "depcut");
    });
  };
  pr.sample = [](const Instance& inst, long count, std::uint64_t seed) {
    auto* t = detail::instance_truth<CutTruth>(inst, "depcut");
    return detail::cantor_answers(t->tail, t->stage < 0, count, seed);
  };
  pr.check_instance = [](const Instance& inst, long) {
    return detail::guarded([&] {
      detail::instance_truth<CutTruth>(inst, "depcut");
      return Verdict::pass();
    });
  };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("stage"))
      return cut_instance(spec.at("stage").get<long>(),
                          StreamDesc::parse(spec.value("tail", std::string("zeros"))));
    Prng g(seed ^ 0x589965cc75374cc3ULL);
    long stage = g.below(4) == 0 ? -1 : static_cast<long>(g.below(16));
    return cut_instance(stage, StreamDesc::prefix(detail::random_bits(g, 24)));
  };
  return pr;
}

inline Problem idp() {
  Problem pr;
  pr.id = "id";
  pr.instance_space = "cantor";
  pr.answer_space = "cantor";
  pr.solve = [](const Instance& inst) { return inst.name; };
  pr.validate = [](const Instance& inst, const Name& cand, long depth) {
    for (long i = 0; i < depth; ++i)
      if (cand.bit(i) != inst.name.bit(i))
        return Verdict::fail("id: bit " + std::to_string(i) + " disagrees with the input");
    return Verdict::pass();
  };
  pr.sample = [](const Instance& inst, long, std::uint64_t) {
    return std::vector<Name>{inst.name};
  };
  pr.check_instance = [](const Instance&, long) { return Verdict::pass(); };
  pr.generate = [](const json& spec, std::uint64_t seed) {
    if (spec.contains("stream"))
      return stream_instance(StreamDesc::parse(spec.at("stream").get<std::string>()));
    Prng g(seed ^ 0x60642e2a34326f45ULL);
    return stream_instance(StreamDesc::prefix(detail::random_bits(g, 24 + g.below(16))));
  };
  return pr;
}

inline Problem problem_by_id(const std::string& id) {
  if (id == "lpo") return lpo();
  if (id == "llpo") return llpo();
  if (id == "llpo_real") return llpo_real();
  if (id == "aouc_unit") return aouc_unit();
  if (id == "aouc_cantor") return aouc_cantor();
  if (id == "rdiv") return rdiv();
  if (id == "ubrdiv") return ubrdiv();
  if (id == "depcut") return depcut();
  if (id == "id") return idp();
  if (id.rfind("cfin:", 0) == 0) return cfin(std::stol(id.substr(5)));
  throw std::invalid_argument(
      "unknown problem '" + id +
      "'; known: lpo, llpo, llpo_real, cfin:<bound>, aouc_unit, aouc_cantor, rdiv, ubrdiv, "
      "depcut, id");
}

// --- corpora: deterministic instance collections keyed by (spec, seed) ---

struct CorpusItem {
  std::string problem;
  json spec;
  std::uint64_t seed = 0;
  Instance instance;
};

inline std::vector<CorpusItem> corpus_items(const Problem& pr, long n, std::uint64_t seed,
                                            const json& spec = json{{"profile", "mixed"}}) {
  Prng root(seed ^ 0x8ad6f4e3352cdb01ULL);
  std::vector<CorpusItem> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    std::uint64_t s = root.next();
    out.push_back({pr.id, spec, s, pr.generate(spec, s)});
  }
  return out;
}

inline std::vector<Instance> seeded_corpus(const Problem& pr, long n, std::uint64_t seed,
                                           const json& spec = json{{"profile", "mixed"}}) {
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(n));
  for (auto& item : corpus_items(pr, n, seed, spec)) out.push_back(std::move(item.instance));
  return out;
}

inline json corpus_to_json(const std::vector<CorpusItem>& items) {
  json arr = json::array();
  for (const auto& it : items)
    arr.push_back({{"problem", it.problem},
                   {"spec", it.spec},
                   {"seed", it.seed},
                   {"ground_truth", truth_ptr_to_json(it.instance.name.truth())}});
  return arr;
}

/// Instances are regenerated from (problem, spec, seed); the stored ground
/// truth is a tamper check, not an input.
inline std::vector<CorpusItem> corpus_from_json(const json& doc) {
  const json& arr = doc.is_array() ? doc : doc.at("items");
  std::vector<CorpusItem> out;
  for (const auto& e : arr) {
    Problem pr = problem_by_id(e.at("problem").get<std::string>());
    std::uint64_t seed = e.at("seed").get<std::uint64_t>();
    CorpusItem item{pr.id, e.at("spec"), seed, pr.generate(e.at("spec"), seed)};
    if (e.contains("ground_truth") &&
        truth_ptr_to_json(item.instance.name.truth()) != e.at("ground_truth"))
      throw std::runtime_error("corpus: stored ground truth disagrees with regeneration for " +
                               pr.id);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace t2k
