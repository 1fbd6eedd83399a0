#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "t2kit/blind.hpp"

// Problem algebra. Products interleave instances and answers componentwise;
// unions and coproducts dispatch on a tag the answer must repeat; powers are
// flat products (never nested pairs); staged problems chain stages through
// links that compute each next instance from the answers so far. star(f, g)
// runs g first and f on the linked instance, so its answers are
// tuple(g-answer, f-answer) in execution order.

namespace t2k {

namespace detail {

inline std::string join_ids(const std::vector<Problem>& ps,
                            std::string (*pickf)(const Problem&)) {
  std::string out;
  for (const Problem& p : ps) out += (out.empty() ? "" : ",") + pickf(p);
  return out;
}

inline std::string pick_id(const Problem& p) { return p.id; }
inline std::string pick_inst(const Problem& p) { return p.instance_space; }
inline std::string pick_ans(const Problem& p) { return p.answer_space; }

/// How many reads a stage validator may spend recovering the truth of a
/// link-produced instance when the link has no oracle channel for it.
inline long stage_observe_budget(long depth) { return 4096 + 64 * depth; }

}  // namespace detail

inline Problem product(const std::vector<Problem>& parts) {
  if (parts.empty()) throw std::invalid_argument("product: no factors");
  auto ps = std::make_shared<const std::vector<Problem>>(parts);
  const std::size_t k = parts.size();
  Problem pr;
  pr.id = "prod(" + detail::join_ids(parts, detail::pick_id) + ")";
  pr.instance_space = "tuple(" + detail::join_ids(parts, detail::pick_inst) + ")";
  pr.answer_space = "tuple(" + detail::join_ids(parts, detail::pick_ans) + ")";
  pr.solve = [ps, k](const Instance& inst) {
    auto in = untuple(inst.name, k);
    std::vector<Name> ans;
    ans.reserve(k);
    for (std::size_t j = 0; j < k; ++j) ans.push_back((*ps)[j].solve(Instance(in[j])));
    return tuple(ans);
  };
  pr.validate = [ps, k](const Instance& inst, const Name& cand, long depth) {
    auto in = untuple(inst.name, k);
    auto ca = untuple(cand, k);
    for (std::size_t j = 0; j < k; ++j) {
      Verdict v = (*ps)[j].validate(Instance(in[j]), ca[j], depth);
      if (!v.ok) return Verdict::fail("factor " + std::to_string(j) + ": " + v.witness);
    }
    return Verdict::pass();
  };
  pr.sample = [ps, k](const Instance& inst, long count, std::uint64_t seed) {
    auto in = untuple(inst.name, k);
    Prng g(seed ^ 0x6a09e667f3bcc909ULL);
    std::vector<std::vector<Name>> per;
    long maxn = 0;
    for (std::size_t j = 0; j < k; ++j) {
      per.push_back((*ps)[j].sample(Instance(in[j]), count, g.next()));
      if (per.back().empty()) return std::vector<Name>{};
      maxn = std::max(maxn, static_cast<long>(per.back().size()));
    }
    std::vector<Name> out;
    for (long i = 0; i < std::min(count, maxn); ++i) {
      std::vector<Name> combo;
      combo.reserve(k);
      for (std::size_t j = 0; j < k; ++j)
        combo.push_back(per[j][static_cast<std::size_t>(i) % per[j].size()]);
      out.push_back(tuple(combo));
    }
    return out;
  };
  pr.check_instance = [ps, k](const Instance& inst, long depth) {
    auto in = untuple(inst.name, k);
    for (std::size_t j = 0; j < k; ++j) {
      Verdict v = (*ps)[j].check_instance(Instance(in[j]), depth);
      if (!v.ok) return Verdict::fail("factor " + std::to_string(j) + ": " + v.witness);
    }
    return Verdict::pass();
  };
  pr.generate = [ps, k](const json& spec, std::uint64_t seed) {
    Prng root(seed ^ 0xbb67ae8584caa73bULL);
    std::vector<Name> names;
    names.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      const json& sj = spec.contains("parts") ? spec.at("parts").at(j) : spec;
      Instance part = (*ps)[j].generate(sj, root.next());
      if (!part.links.empty())
        throw std::invalid_argument("product: staged factors are not supported");
      names.push_back(part.name);
    }
    return Instance(tuple(names));
  };
  return pr;
}

inline Problem power(const Problem& f, long n) {
  if (n < 0) throw std::invalid_argument("power: negative exponent");
  if (n == 0) {
    Problem pr = idp();
    pr.id = f.id + "^0";
    return pr;
  }
  Problem pr = product(std::vector<Problem>(static_cast<std::size_t>(n), f));
  pr.id = f.id + "^" + std::to_string(n);
  return pr;
}

inline Problem disjoint_union(const Problem& f, const Problem& g) {
  auto fs = std::make_shared<const Problem>(f);
  auto gs = std::make_shared<const Problem>(g);
  auto pick = [fs, gs](int tag) -> const Problem& { return tag == 0 ? *fs : *gs; };
  Problem pr;
  pr.id = "union(" + f.id + "," + g.id + ")";
  pr.instance_space = "union(" + f.instance_space + "," + g.instance_space + ")";
  pr.answer_space = "union(" + f.answer_space + "," + g.answer_space + ")";
  pr.solve = [pick](const Instance& inst) {
    auto [tag, payload] = project_union(inst.name);
    return inject_union(tag, pick(tag).solve(Instance(payload, inst.links)));
  };
  pr.validate = [pick](const Instance& inst, const Name& cand, long depth) {
    auto [tag, payload] = project_union(inst.name);
    auto [ctag, cpay] = project_union(cand);
    if (ctag != tag)
      return Verdict::fail("union: answer tagged " + std::to_string(ctag) +
                           " for an instance tagged " + std::to_string(tag));
    return pick(tag).validate(Instance(payload, inst.links), cpay, depth);
  };
  pr.sample = [pick](const Instance& inst, long count, std::uint64_t seed) {
    auto [tag, payload] = project_union(inst.name);
    std::vector<Name> out;
    for (const Name& a : pick(tag).sample(Instance(payload, inst.links), count, seed))
      out.push_back(inject_union(tag, a));
    return out;
  };
  pr.check_instance = [pick](const Instance& inst, long depth) {
    auto [tag, payload] = project_union(inst.name);
    return pick(tag).check_instance(Instance(payload, inst.links), depth);
  };
  pr.generate = [pick](const json& spec, std::uint64_t seed) {
    Prng g(seed ^ 0x3c6ef372fe94f82bULL);
    int tag = spec.contains("tag") ? spec.at("tag").get<int>() : (g.flip() ? 1 : 0);
    if (tag != 0 && tag != 1) throw std::invalid_argument("union: tag must be 0 or 1");
    json inner = spec.contains("inner") ? spec.at("inner") : json{{"profile", "mixed"}};
    Instance in = pick(tag).generate(inner, g.next());
    return Instance(inject_union(tag, in.name), in.links);
  };
  return pr;
}

/// N-ary tagged sum over a family of member problems; arity -1 means the
/// family is unbounded.
inline Problem coproduct(std::function<Problem(long)> family, long arity,
                         const std::string& label) {
  Problem pr;
  pr.id = "coprod(" + label + ")";
  pr.instance_space = "coprod(" + label + ")";
  pr.answer_space = "coprod(" + label + ")";
  auto member = [family, arity](const Int& tag) {
    long n = tag.convert_to<long>();
    if (n < 0 || (arity >= 0 && n >= arity))
      throw std::out_of_range("coproduct: tag " + std::to_string(n) + " out of range");
    return family(n);
  };
  pr.solve = [member](const Instance& inst) {
    auto [tag, payload] = project_coproduct(inst.name);
    return inject_coproduct(tag, member(tag).solve(Instance(payload, inst.links)));
  };
  pr.validate = [member](const Instance& inst, const Name& cand, long depth) {
    auto [tag, payload] = project_coproduct(inst.name);
    auto [ctag, cpay] = project_coproduct(cand);
    if (ctag != tag)
      return Verdict::fail("coproduct: answer tagged " + ctag.str() +
                           " for an instance tagged " + tag.str());
    return member(tag).validate(Instance(payload, inst.links), cpay, depth);
  };
  pr.sample = [member](const Instance& inst, long count, std::uint64_t seed) {
    auto [tag, payload] = project_coproduct(inst.name);
    std::vector<Name> out;
    for (const Name& a : member(tag).sample(Instance(payload, inst.links), count, seed))
      out.push_back(inject_coproduct(tag, a));
    return out;
  };
  pr.check_instance = [member](const Instance& inst, long depth) {
    auto [tag, payload] = project_coproduct(inst.name);
    return member(tag).check_instance(Instance(payload, inst.links), depth);
  };
  pr.generate = [member, arity](const json& spec, std::uint64_t seed) {
    Prng g(seed ^ 0xa54ff53a5f1d36f1ULL);
    long tag = spec.contains("tag")
                   ? spec.at("tag").get<long>()
                   : static_cast<long>(arity >= 0 ? g.below(static_cast<std::uint64_t>(arity))
                                                  : 1 + g.below(3));
    json inner = spec.contains("inner") ? spec.at("inner") : json{{"profile", "mixed"}};
    Instance in = member(Int(tag)).generate(inner, g.next());
    return Instance(inject_coproduct(Int(tag), in.name), in.links);
  };
  return pr;
}

inline Problem star_power(const Problem& f) {
  Problem base = f;
  Problem pr = coproduct([base](long n) { return power(base, n); }, -1, base.id + "^n");
  pr.id = base.id + "^*";
  return pr;
}

// --- link families ---

namespace detail {

inline StarLink table_link(const Problem& next_stage, const json& lspec, std::uint64_t seed) {
  Prng root(seed ^ 0x510e527fade682d1ULL);
  auto items = std::make_shared<std::vector<Instance>>();
  for (const auto& ispec : lspec.at("instances"))
    items->push_back(next_stage.generate(ispec, root.next()));
  if (items->empty()) throw std::invalid_argument("table link: no instances");
  auto index_of_answer = [items](const std::vector<Name>& answers) {
    if (answers.empty()) throw std::invalid_argument("table link: no answers yet");
    return static_cast<std::size_t>(blind_nat(answers.back())) % items->size();
  };
  StarLink link;
  link.apply = [items, index_of_answer](const std::vector<Name>& answers) {
    return without_truth((*items)[index_of_answer(answers)].name);
  };
  link.truth_of = [items, index_of_answer](const std::vector<Name>& answers) {
    return (*items)[index_of_answer(answers)].name.truth();
  };
  return link;
}

inline StarLink sign_stream_link(const json& lspec) {
  Rational c = rat_parse(lspec.at("target").get<std::string>());
  auto stream_gen = [c](const Name& y) {
    auto ap = approx_getter(y);
    return [ap, c](const Int& pos) {
      long s = pos.convert_to<long>();
      for (long u = 0; u <= s; ++u)
        if (abs(Rational(ap(u) - c)) > Rational(2, pow2(u))) return 1;
      return 0;
    };
  };
  StarLink link;
  link.apply = [stream_gen](const std::vector<Name>& answers) {
    if (answers.empty()) throw std::invalid_argument("sign_stream link: no answers yet");
    return Name::from_bits(stream_gen(answers.back()), "cantor");
  };
  link.truth_of = [stream_gen, c](const std::vector<Name>& answers) {
    auto* yt = truth_as<RatTruth>(answers.back().truth());
    if (!yt) throw std::runtime_error("sign_stream link: answer carries no exact value");
    if (yt->value == c) return make_truth(StreamTruth{StreamDesc::zeros()});
    auto gen = stream_gen(answers.back());
    std::string bits;
    for (Int s(0);; ++s) {
      int bv = gen(s);
      bits.push_back(bv ? '1' : '0');
      if (bv) return make_truth(StreamTruth{StreamDesc::prefix(bits)});
    }
  };
  return link;
}

inline StarLink affine_link(const json& lspec) {
  std::vector<Rational> coeffs;
  for (const auto& s : lspec.at("a")) coeffs.push_back(rat_parse(s.get<std::string>()));
  Rational offset = rat_parse(lspec.at("b").get<std::string>());
  long slot = lspec.value("slot", 0L);
  if (coeffs.empty()) throw std::invalid_argument("affine link: no coefficients");
  const std::size_t k = coeffs.size();

  auto ball_view = [coeffs, offset, slot, k](const Name& yt) {
    std::vector<Name> parts = k == 1 && yt.raw().shape != "tuple"
                                  ? std::vector<Name>{yt}
                                  : untuple(yt, k);
    auto getters = std::make_shared<std::vector<std::function<Rational(long)>>>();
    for (const Name& p : parts) getters->push_back(approx_getter(p));
    return [coeffs, offset, slot, getters](long s) -> std::optional<Ball> {
      if (s < slot) return std::nullopt;
      long u = s - slot;
      long prec = slot + u + 6;
      Rational center = offset, err(0);
      for (std::size_t i = 0; i < coeffs.size(); ++i) {
        center += coeffs[i] * (*getters)[i](prec);
        err += abs(coeffs[i]) / pow2(prec);
      }
      return shrink_ball(center, err, u);
    };
  };

  StarLink link;
  link.apply = [ball_view](const std::vector<Name>& answers) {
    if (answers.empty()) throw std::invalid_argument("affine link: no answers yet");
    return closed_unit_from_balls(ball_view(answers.back()));
  };
  link.truth_of = [coeffs, offset, slot, k](const std::vector<Name>& answers) {
    const Name& yt = answers.back();
    std::vector<Name> parts =
        k == 1 && yt.raw().shape != "tuple" ? std::vector<Name>{yt} : untuple(yt, k);
    Rational p = offset;
    for (std::size_t i = 0; i < k; ++i) {
      auto* rt = truth_as<RatTruth>(parts[i].truth());
      if (!rt) throw std::runtime_error("affine link: answer carries no exact value");
      p += coeffs[i] * rt->value;
    }
    if (p < 0 || p > 1)
      throw std::runtime_error("affine link: image " + rat_str(p) + " leaves [0,1]");
    return make_truth(UnitSetTruth{false, p, slot});
  };
  return link;
}

inline StarLink make_link(const Problem& next_stage, const json& lspec, std::uint64_t seed) {
  const std::string family = lspec.at("family").get<std::string>();
  if (family == "table") return table_link(next_stage, lspec, seed);
  if (family == "sign_stream") return sign_stream_link(lspec);
  if (family == "affine") return affine_link(lspec);
  throw std::invalid_argument("unknown link family '" + family +
                              "'; known: table, sign_stream, affine");
}

}  // namespace detail

/// Chain of stages joined by links; stage i+1's instance is computed from the
/// answers of stages 0..i. Answers are the flat tuple in execution order.
inline Problem staged(const std::vector<Problem>& stages) {
  if (stages.empty()) throw std::invalid_argument("staged: no stages");
  auto ss = std::make_shared<const std::vector<Problem>>(stages);
  const std::size_t m = stages.size();
  Problem pr;
  pr.id = "staged(" + detail::join_ids(stages, detail::pick_id) + ")";
  pr.instance_space = stages.front().instance_space;
  pr.answer_space = "tuple(" + detail::join_ids(stages, detail::pick_ans) + ")";

  auto next_instance = [ss](const Instance& inst, std::size_t i, const std::vector<Name>& answers,
                            long depth) {
    const StarLink& lk = inst.links[i];
    Name next = lk.apply(answers);
    std::shared_ptr<const Truth> t;
    if (lk.truth_of) {
      try {
        t = lk.truth_of(answers);
      } catch (const std::exception&) {
        t = nullptr;
      }
    }
    if (!t)
      t = observed_truth((*ss)[i + 1].instance_space, next,
                         detail::stage_observe_budget(depth));
    return Instance(with_truth(next, t));
  };

  pr.solve = [ss, m, next_instance](const Instance& inst) {
    if (inst.links.size() != m - 1)
      throw std::invalid_argument("staged: expected " + std::to_string(m - 1) + " links, got " +
                                  std::to_string(inst.links.size()));
    std::vector<Name> answers;
    Instance cur(inst.name);
    for (std::size_t i = 0; i < m; ++i) {
      answers.push_back((*ss)[i].solve(cur));
      if (i + 1 < m) cur = next_instance(inst, i, answers, 64);
    }
    return tuple(answers);
  };
  pr.validate = [ss, m, next_instance](const Instance& inst, const Name& cand, long depth) {
    if (inst.links.size() != m - 1)
      return Verdict::fail("staged: expected " + std::to_string(m - 1) + " links");
    auto parts = untuple(cand, m);
    std::vector<Name> sofar;
    Instance cur(inst.name);
    for (std::size_t i = 0; i < m; ++i) {
      Verdict v = (*ss)[i].validate(cur, parts[i], depth);
      if (!v.ok) return Verdict::fail("stage " + std::to_string(i) + ": " + v.witness);
      sofar.push_back(parts[i]);
      if (i + 1 < m) cur = next_instance(inst, i, sofar, depth);
    }
    return Verdict::pass();
  };
  pr.sample = [ss, m, next_instance](const Instance& inst, long count, std::uint64_t seed) {
    Prng g(seed ^ 0x9b05688c2b3e6c1fULL);
    std::vector<Name> results;
    std::vector<Name> acc;
    std::function<void(std::size_t, const Instance&)> rec = [&](std::size_t i,
                                                                const Instance& cur) {
      if (static_cast<long>(results.size()) >= count) return;
      if (i == m) {
        results.push_back(tuple(acc));
        return;
      }
      for (const Name& a : (*ss)[i].sample(cur, count, g.next())) {
        if (static_cast<long>(results.size()) >= count) return;
        acc.push_back(a);
        rec(i + 1, i + 1 < m ? next_instance(inst, i, acc, 24) : cur);
        acc.pop_back();
      }
    };
    rec(0, Instance(inst.name));
    return results;
  };
  pr.check_instance = [ss, m](const Instance& inst, long depth) {
    if (inst.links.size() != m - 1)
      return Verdict::fail("staged: expected " + std::to_string(m - 1) + " links, got " +
                           std::to_string(inst.links.size()));
    for (const StarLink& lk : inst.links)
      if (!lk.apply) return Verdict::fail("staged: link without an apply map");
    return (*ss)[0].check_instance(Instance(inst.name), depth);
  };
  pr.generate = [ss, m](const json& spec, std::uint64_t seed) {
    Prng root(seed ^ 0x1f83d9abfb41bd6bULL);
    Instance base =
        (*ss)[0].generate(spec.value("base", json{{"profile", "mixed"}}), root.next());
    if (!base.links.empty())
      throw std::invalid_argument("staged: the base stage may not itself be staged");
    if (m >= 2) {
      if (!spec.contains("links"))
        throw std::invalid_argument("staged generation needs a link spec per stage");
      const auto& ls = spec.at("links");
      if (ls.size() != m - 1)
        throw std::invalid_argument("staged: expected " + std::to_string(m - 1) + " link specs");
      for (std::size_t i = 0; i + 1 < m; ++i)
        base.links.push_back(detail::make_link((*ss)[i + 1], ls.at(i), root.next()));
    }
    return base;
  };
  return pr;
}

inline Problem star(const Problem& f, const Problem& g) {
  Problem pr = staged({g, f});
  pr.id = "star(" + f.id + "," + g.id + ")";
  return pr;
}

inline Problem iter_star(const Problem& f, long n) {
  if (n < 0) throw std::invalid_argument("iter_star: negative exponent");
  if (n == 0) {
    Problem pr = idp();
    pr.id = f.id + "^(0)";
    return pr;
  }
  Problem pr = staged(std::vector<Problem>(static_cast<std::size_t>(n), f));
  pr.id = f.id + "^(" + std::to_string(n) + ")";
  return pr;
}

}  // namespace t2k
