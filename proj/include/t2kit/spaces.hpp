#pragma once

#include <json.hpp>

#include "t2kit/name.hpp"

// Encoding and decoding of points for each represented space, the structural
// operations (tupling, union and coproduct tags), and the JSON form used by
// corpus files. Encoders produce names that carry both the ground truth and
// the structured view appropriate to the space; decoders work from the view
// when one is present and otherwise scan raw bits under a step budget,
// reporting the offending position when the block structure is broken.

namespace t2k {

using json = nlohmann::json;

inline Int floor_div(const Int& a, const Int& b) {
  Int q = a / b;
  if (q * b > a) q -= 1;
  return q;
}

// --- encoders ---

inline Name encode_nat(const Int& n) {
  if (n < 0) throw std::domain_error("encode_nat: negative");
  return Name::from_bits([n](const Int& p) { return p < n ? 0 : 1; }, "nat",
                         make_truth(NatTruth{n}));
}

/// Best approximation to q on the grid 2^{-i}; always within 2^{-i-1}.
inline Rational dyadic_round(const Rational& q, long i) {
  Int num = numerator(q) * pow2(i) * 2 + denominator(q);
  return Rational(floor_div(num, 2 * denominator(q)), pow2(i));
}

/// Real name from an arbitrary approximant stream (|approx(i) - x| < 2^{-i}).
inline Name real_name_from_approx(std::function<Rational(long)> approx,
                                  std::shared_ptr<const Truth> truth) {
  auto lens = std::make_shared<std::map<long, Int>>();
  auto lens_mu = std::make_shared<std::mutex>();
  auto len = [approx, lens, lens_mu](long b) {
    std::scoped_lock lk(*lens_mu);
    auto it = lens->find(b);
    if (it == lens->end()) it = lens->emplace(b, index_of(approx(b)) + 1).first;
    return it->second;
  };
  auto bit_in = [len](long b, const Int& off) { return off < len(b) - 1 ? 0 : 1; };
  BlockTable table(len, bit_in);
  auto impl = std::make_shared<NameImpl>();
  impl->gen = table.as_fn();
  impl->kind = "real";
  impl->truth = std::move(truth);
  impl->approx = std::move(approx);
  return Name(impl);
}

inline Name encode_real(const Rational& q) {
  return real_name_from_approx([q](long i) { return dyadic_round(q, i); },
                               make_truth(RatTruth{q}));
}

inline Name encode_cantor(const StreamDesc& s) { return Name::from_stream(s, "cantor"); }

inline Name encode_finset(long bound, const std::set<long>& elems) {
  if (bound < 0) throw std::domain_error("encode_finset: negative bound");
  for (long e : elems)
    if (e < 0 || e > bound) throw std::domain_error("encode_finset: element out of range");
  std::vector<long> excluded;
  for (long k = 0; k <= bound; ++k)
    if (!elems.count(k)) excluded.push_back(k);
  auto len = [bound, excluded](long b) {
    if (b < static_cast<long>(excluded.size())) return Int(bound + 4 + excluded[b]);
    return Int(-1);
  };
  auto bit_in = [bound, excluded](long b, const Int& off) {
    if (b >= static_cast<long>(excluded.size())) return 1;
    long k = excluded[b];
    if (off < bound + 2) return 1;
    if (off == bound + 2) return 0;
    if (off < bound + 3 + k) return 1;
    return 0;  // off == bound + 3 + k
  };
  BlockTable table(len, bit_in);
  return Name::from_bits(table.as_fn(), "finset:" + std::to_string(bound),
                         make_truth(SetTruth{bound, elems}));
}

/// Ball stream for an all-or-one-point closed subset of [0,1]. Pads until the
/// collapse slot, then alternates balls covering everything left of, then
/// right of, the point, closing in dyadically.
inline std::optional<Ball> unit_set_ball(const UnitSetTruth& t, long slot) {
  if (t.is_all || t.collapse_slot < 0 || slot < t.collapse_slot) return std::nullopt;
  long u = slot - t.collapse_slot;
  long step = u / 2;
  Rational gap = Rational(1, pow2(step + 2));
  if (u % 2 == 0) {
    Rational upper = t.point - gap;
    return Ball{(upper - 1) / 2, (upper + 1) / 2};
  }
  Rational lower = t.point + gap;
  return Ball{(lower + 2) / 2, (2 - lower) / 2};
}

inline Name encode_closed_unit(const UnitSetTruth& t) {
  if (!t.is_all && (t.point < 0 || t.point > 1))
    throw std::domain_error("encode_closed_unit: point outside [0,1]");
  if (!t.is_all && t.collapse_slot < 0)
    throw std::domain_error("encode_closed_unit: singleton needs a collapse slot");
  auto view = [t](long slot) { return unit_set_ball(t, slot); };
  auto impl = std::make_shared<NameImpl>();
  if (t.is_all) {
    impl->gen = [](const Int&) { return 1; };
  } else {
    auto len = [view](long b) {
      auto o = view(b);
      if (!o) return Int(1);
      Int m = pair_nat(index_of(o->center), positive_rational_index(o->radius));
      return Int(m + 2);
    };
    auto bit_in = [view](long b, const Int& off) {
      auto o = view(b);
      if (!o) return 1;
      Int m = pair_nat(index_of(o->center), positive_rational_index(o->radius));
      return off == m + 1 ? 1 : 0;
    };
    BlockTable table(len, bit_in);
    impl->gen = table.as_fn();
  }
  impl->kind = "closed_unit";
  impl->truth = make_truth(t);
  impl->ball = view;
  return Name(impl);
}

inline LevelRec tree_level(const TreeTruth& t, long l) {
  if (l <= 0) return LevelRec{true, {}};
  if (t.is_full || (t.collapse_level >= 0 && l < t.collapse_level)) return LevelRec{true, {}};
  std::vector<int> node;
  node.reserve(static_cast<std::size_t>(l));
  for (long j = 0; j < l; ++j) node.push_back(t.path.bit(j));
  return LevelRec{false, node};
}

inline Name encode_aou_tree(const TreeTruth& t) {
  if (!t.is_full && t.collapse_level < 1)
    throw std::domain_error("encode_aou_tree: collapse level must be >= 1");
  auto len = [t](long b) {
    long l = b + 1;
    if (t.is_full || l < t.collapse_level) return Int(1);
    if (l == t.collapse_level) return Int(1 + l);
    return Int(2);
  };
  auto bit_in = [t](long b, const Int& off) {
    long l = b + 1;
    if (t.is_full || l < t.collapse_level) return 0;
    if (off == 0) return 1;
    if (l == t.collapse_level) return t.path.bit(off.convert_to<long>() - 1);
    return t.path.bit(l - 1);
  };
  BlockTable table(len, bit_in);
  auto impl = std::make_shared<NameImpl>();
  impl->gen = table.as_fn();
  impl->kind = "aou_tree";
  impl->truth = make_truth(t);
  impl->level = [t](long l) { return tree_level(t, l); };
  return Name(impl);
}

inline Name encode_cut(const CutTruth& t) {
  auto gen = [t](const Int& p) {
    if (t.stage < 0) return 0;
    if (p < t.stage) return 0;
    if (p == t.stage) return 1;
    return t.tail.bit(p - t.stage - 1);
  };
  return Name::from_bits(gen, "cut", make_truth(t));
}

// --- structural operations ---

inline Name tuple(const std::vector<Name>& parts) {
  if (parts.empty()) throw std::invalid_argument("tuple: arity must be >= 1");
  std::size_t k = parts.size();
  std::string kind = "tuple(";
  TupleTruth tt;
  for (std::size_t j = 0; j < k; ++j) {
    kind += parts[j].kind();
    if (j + 1 < k) kind += ",";
    tt.parts.push_back(parts[j].truth());
  }
  kind += ")";
  auto impl = std::make_shared<NameImpl>();
  std::vector<Name> copy = parts;
  impl->gen = [copy, k](const Int& p) {
    Int i = p / Int(k);
    auto j = (p % Int(k)).convert_to<std::size_t>();
    return copy[j].bit(i);
  };
  impl->kind = std::move(kind);
  impl->truth = make_truth(std::move(tt));
  impl->shape = "tuple";
  impl->parts = parts;
  return Name(impl);
}

inline std::vector<Name> untuple(const Name& n, std::size_t arity) {
  if (arity == 0) throw std::invalid_argument("untuple: arity must be >= 1");
  if (n.raw().shape == "tuple" && n.raw().parts.size() == arity) return n.raw().parts;
  std::vector<Name> out;
  for (std::size_t j = 0; j < arity; ++j) {
    Name base = n;
    out.push_back(Name::from_bits(
        [base, j, arity](const Int& i) { return base.bit(i * Int(arity) + Int(j)); },
        "slice"));
  }
  return out;
}

inline Name inject_union(int tag, const Name& payload) {
  if (tag != 0 && tag != 1) throw std::domain_error("inject_union: tag must be 0 or 1");
  auto impl = std::make_shared<NameImpl>();
  Name base = payload;
  impl->gen = [tag, base](const Int& p) { return p == 0 ? tag : base.bit(p - 1); };
  impl->kind = "union(" + payload.kind() + ")";
  impl->truth = make_truth(TagTruth{Int(tag), payload.truth()});
  impl->shape = "tag";
  impl->tag_prefix_len = 1;
  impl->parts = {payload};
  return Name(impl);
}

inline Name inject_coproduct(const Int& n, const Name& payload) {
  if (n < 0) throw std::domain_error("inject_coproduct: negative tag");
  auto impl = std::make_shared<NameImpl>();
  Name base = payload;
  impl->gen = [n, base](const Int& p) {
    if (p < n) return 0;
    if (p == n) return 1;
    return base.bit(p - n - 1);
  };
  impl->kind = "coprod(" + payload.kind() + ")";
  impl->truth = make_truth(TagTruth{n, payload.truth()});
  impl->shape = "tag";
  impl->tag_prefix_len = n + 1;
  impl->parts = {payload};
  return Name(impl);
}

inline std::pair<int, Name> project_union(const Name& n) {
  if (n.raw().shape == "tag" && !n.raw().parts.empty())
    return {n.bit(0L), n.raw().parts[0]};
  Name base = n;
  return {n.bit(0L),
          Name::from_bits([base](const Int& p) { return base.bit(p + 1); }, "payload")};
}

inline std::pair<Int, Name> project_coproduct(const Name& n, long scan_cap = 1L << 20) {
  if (n.raw().shape == "tag" && !n.raw().parts.empty()) {
    Int tag = n.raw().tag_prefix_len - 1;
    return {tag, n.raw().parts[0]};
  }
  Int k(0);
  while (n.bit(k) == 0) {
    ++k;
    if (k > scan_cap)
      throw std::runtime_error("project_coproduct: no tag terminator within " +
                               std::to_string(scan_cap) + " positions");
  }
  Name base = n;
  Int shift = k + 1;
  return {k, Name::from_bits([base, shift](const Int& p) { return base.bit(p + shift); },
                             "payload")};
}

// --- bit-level scanners (views for names that arrived as raw bits) ---

/// Approximant stream recovered by counting the unary blocks of a real name.
inline std::function<Rational(long)> bit_approx_view(const Name& n,
                                                     long per_block_cap = 1L << 20) {
  struct State {
    std::mutex mu;
    std::vector<Rational> blocks;
    Int pos{0};
  };
  auto st = std::make_shared<State>();
  Name base = n;
  return [st, base, per_block_cap](long i) {
    std::scoped_lock lk(st->mu);
    while (static_cast<long>(st->blocks.size()) <= i) {
      Int zeros(0);
      long steps = 0;
      while (base.bit(st->pos) == 0) {
        ++zeros;
        ++st->pos;
        if (++steps > per_block_cap)
          throw std::runtime_error("real name: no block terminator within budget near position " +
                                   st->pos.str());
      }
      ++st->pos;  // the closing 1
      st->blocks.push_back(rational_enumeration(zeros));
    }
    return st->blocks[static_cast<std::size_t>(i)];
  };
}

/// Ball stream recovered from the slot blocks of a closed-set name.
inline std::function<std::optional<Ball>(long)> bit_ball_view(const Name& n,
                                                              long per_slot_cap = 1L << 20) {
  struct State {
    std::mutex mu;
    std::vector<std::optional<Ball>> slots;
    Int pos{0};
  };
  auto st = std::make_shared<State>();
  Name base = n;
  return [st, base, per_slot_cap](long s) {
    std::scoped_lock lk(st->mu);
    while (static_cast<long>(st->slots.size()) <= s) {
      Int zeros(0);
      long steps = 0;
      while (base.bit(st->pos) == 0) {
        ++zeros;
        ++st->pos;
        if (++steps > per_slot_cap)
          throw std::runtime_error("closed-set name: unterminated slot near position " +
                                   st->pos.str());
      }
      ++st->pos;
      if (zeros == 0) {
        st->slots.push_back(std::nullopt);
      } else {
        auto [ci, ri] = unpair_nat(zeros - 1);
        st->slots.push_back(Ball{rational_enumeration(ci), positive_rational_enumeration(ri)});
      }
    }
    return st->slots[static_cast<std::size_t>(s)];
  };
}

/// Level records recovered from a tree name; rejects a full level after a collapse.
inline std::function<LevelRec(long)> bit_level_view(const Name& n) {
  struct State {
    std::mutex mu;
    std::vector<LevelRec> levels;  // levels[l-1] describes level l
    std::vector<int> path;
    bool collapsed = false;
    Int pos{0};
  };
  auto st = std::make_shared<State>();
  Name base = n;
  return [st, base](long l) {
    if (l <= 0) return LevelRec{true, {}};
    std::scoped_lock lk(st->mu);
    while (static_cast<long>(st->levels.size()) < l) {
      long lvl = static_cast<long>(st->levels.size()) + 1;
      int head = base.bit(st->pos);
      ++st->pos;
      if (head == 0) {
        if (st->collapsed)
          throw std::runtime_error("tree name: full level after a collapse at position " +
                                   Int(st->pos - 1).str());
        st->levels.push_back(LevelRec{true, {}});
        continue;
      }
      if (!st->collapsed) {
        st->collapsed = true;
        for (long j = 0; j < lvl; ++j) {
          st->path.push_back(base.bit(st->pos));
          ++st->pos;
        }
      } else {
        st->path.push_back(base.bit(st->pos));
        ++st->pos;
      }
      st->levels.push_back(LevelRec{false, st->path});
    }
    return st->levels[static_cast<std::size_t>(l - 1)];
  };
}

/// A name equipped with the derived view its kind calls for, when missing.
inline Name with_derived_views(const Name& n) {
  const auto& im = n.raw();
  if (im.kind == "real" && !im.approx) {
    auto impl = std::make_shared<NameImpl>();
    Name base = n;
    impl->gen = [base](const Int& p) { return base.bit(p); };
    impl->kind = im.kind;
    impl->truth = im.truth;
    impl->approx = bit_approx_view(n);
    return Name(impl);
  }
  if (im.kind == "closed_unit" && !im.ball) {
    auto impl = std::make_shared<NameImpl>();
    Name base = n;
    impl->gen = [base](const Int& p) { return base.bit(p); };
    impl->kind = im.kind;
    impl->truth = im.truth;
    impl->ball = bit_ball_view(n);
    return Name(impl);
  }
  if (im.kind == "aou_tree" && !im.level) {
    auto impl = std::make_shared<NameImpl>();
    Name base = n;
    impl->gen = [base](const Int& p) { return base.bit(p); };
    impl->kind = im.kind;
    impl->truth = im.truth;
    impl->level = bit_level_view(n);
    return Name(impl);
  }
  return n;
}

// --- truth (de)serialization ---

inline std::string rat_str(const Rational& q) {
  return numerator(q).str() + "/" + denominator(q).str();
}
inline Rational rat_parse(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(Int(s));
  return Rational(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
}

inline json truth_to_json(const Truth& t);

inline json truth_ptr_to_json(const std::shared_ptr<const Truth>& p) {
  if (!p) return nullptr;
  return truth_to_json(*p);
}

inline json truth_to_json(const Truth& t) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NatTruth>) {
          return {{"type", "nat"}, {"value", v.value.str()}};
        } else if constexpr (std::is_same_v<T, RatTruth>) {
          return {{"type", "rat"}, {"value", rat_str(v.value)}};
        } else if constexpr (std::is_same_v<T, SetTruth>) {
          return {{"type", "set"}, {"bound", v.bound}, {"elems", v.elems}};
        } else if constexpr (std::is_same_v<T, StreamTruth>) {
          if (!v.s.serializable())
            throw std::runtime_error("truth_to_json: opaque stream is not serializable");
          return {{"type", "stream"}, {"spec", v.s.spec}};
        } else if constexpr (std::is_same_v<T, UnitSetTruth>) {
          json j{{"type", "unit_set"}, {"all", v.is_all}};
          if (!v.is_all) {
            j["point"] = rat_str(v.point);
            j["slot"] = v.collapse_slot;
          }
          return j;
        } else if constexpr (std::is_same_v<T, TreeTruth>) {
          json j{{"type", "tree"}, {"full", v.is_full}};
          if (!v.is_full) {
            if (!v.path.serializable())
              throw std::runtime_error("truth_to_json: opaque tree path");
            j["level"] = v.collapse_level;
            j["path"] = v.path.spec;
          }
          return j;
        } else if constexpr (std::is_same_v<T, CutTruth>) {
          json j{{"type", "cut"}, {"stage", v.stage}};
          if (v.stage >= 0) {
            if (!v.tail.serializable()) throw std::runtime_error("truth_to_json: opaque tail");
            j["tail"] = v.tail.spec;
          }
          return j;
        } else if constexpr (std::is_same_v<T, TupleTruth>) {
          json parts = json::array();
          for (const auto& p : v.parts) parts.push_back(truth_ptr_to_json(p));
          return {{"type", "tuple"}, {"parts", parts}};
        } else {
          static_assert(std::is_same_v<T, TagTruth>);
          return {{"type", "tag"}, {"tag", v.tag.str()}, {"inner", truth_ptr_to_json(v.inner)}};
        }
      },
      t.var());
}

inline std::shared_ptr<const Truth> truth_from_json(const json& j) {
  if (j.is_null()) return nullptr;
  const std::string type = j.at("type").get<std::string>();
  if (type == "nat") return make_truth(NatTruth{Int(j.at("value").get<std::string>())});
  if (type == "rat") return make_truth(RatTruth{rat_parse(j.at("value").get<std::string>())});
  if (type == "set") {
    SetTruth s;
    s.bound = j.at("bound").get<long>();
    for (auto e : j.at("elems")) s.elems.insert(e.get<long>());
    return make_truth(std::move(s));
  }
  if (type == "stream")
    return make_truth(StreamTruth{StreamDesc::parse(j.at("spec").get<std::string>())});
  if (type == "unit_set") {
    UnitSetTruth u;
    u.is_all = j.at("all").get<bool>();
    if (!u.is_all) {
      u.point = rat_parse(j.at("point").get<std::string>());
      u.collapse_slot = j.at("slot").get<long>();
    }
    return make_truth(std::move(u));
  }
  if (type == "tree") {
    TreeTruth t;
    t.is_full = j.at("full").get<bool>();
    if (!t.is_full) {
      t.collapse_level = j.at("level").get<long>();
      t.path = StreamDesc::parse(j.at("path").get<std::string>());
    }
    return make_truth(std::move(t));
  }
  if (type == "cut") {
    CutTruth c;
    c.stage = j.at("stage").get<long>();
    if (c.stage >= 0) c.tail = StreamDesc::parse(j.at("tail").get<std::string>());
    return make_truth(std::move(c));
  }
  if (type == "tuple") {
    TupleTruth t;
    for (const auto& p : j.at("parts")) t.parts.push_back(truth_from_json(p));
    return make_truth(std::move(t));
  }
  if (type == "tag") {
    return make_truth(
        TagTruth{Int(j.at("tag").get<std::string>()), truth_from_json(j.at("inner"))});
  }
  throw std::invalid_argument("truth_from_json: unknown type '" + type + "'");
}

// --- space-descriptor dispatch ---

namespace detail {

inline std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline bool strip_wrapper(const std::string& space, const std::string& head, std::string& inner) {
  if (space.rfind(head + "(", 0) == 0 && space.back() == ')') {
    inner = space.substr(head.size() + 1, space.size() - head.size() - 2);
    return true;
  }
  return false;
}

}  // namespace detail

inline Name encode_point(const std::string& space, const Truth& t) {
  std::string inner;
  if (space == "nat") {
    if (auto* v = std::get_if<NatTruth>(&t.var())) return encode_nat(v->value);
  } else if (space == "real") {
    if (auto* v = std::get_if<RatTruth>(&t.var())) return encode_real(v->value);
  } else if (space == "cantor") {
    if (auto* v = std::get_if<StreamTruth>(&t.var())) return encode_cantor(v->s);
  } else if (space.rfind("finset:", 0) == 0) {
    if (auto* v = std::get_if<SetTruth>(&t.var())) {
      long bound = std::stol(space.substr(7));
      if (bound != v->bound) throw std::invalid_argument("encode_point: finset bound mismatch");
      return encode_finset(v->bound, v->elems);
    }
  } else if (space == "closed_unit") {
    if (auto* v = std::get_if<UnitSetTruth>(&t.var())) return encode_closed_unit(*v);
  } else if (space == "aou_tree") {
    if (auto* v = std::get_if<TreeTruth>(&t.var())) return encode_aou_tree(*v);
  } else if (space == "cut") {
    if (auto* v = std::get_if<CutTruth>(&t.var())) return encode_cut(*v);
  } else if (detail::strip_wrapper(space, "tuple", inner)) {
    if (auto* v = std::get_if<TupleTruth>(&t.var())) {
      auto args = detail::split_args(inner);
      if (args.size() != v->parts.size())
        throw std::invalid_argument("encode_point: tuple arity mismatch");
      std::vector<Name> parts;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (!v->parts[i]) throw std::invalid_argument("encode_point: missing tuple part truth");
        parts.push_back(encode_point(args[i], *v->parts[i]));
      }
      return tuple(parts);
    }
  } else if (detail::strip_wrapper(space, "union", inner)) {
    if (auto* v = std::get_if<TagTruth>(&t.var())) {
      if (!v->inner) throw std::invalid_argument("encode_point: missing union payload truth");
      return inject_union(v->tag.convert_to<int>(), encode_point(inner, *v->inner));
    }
  } else if (detail::strip_wrapper(space, "coprod", inner)) {
    if (auto* v = std::get_if<TagTruth>(&t.var())) {
      if (!v->inner) throw std::invalid_argument("encode_point: missing coproduct payload truth");
      return inject_coproduct(v->tag, encode_point(inner, *v->inner));
    }
  } else {
    throw std::invalid_argument("encode_point: unknown space '" + space + "'");
  }
  throw std::invalid_argument("encode_point: truth does not fit space '" + space + "'");
}

inline json decode_point(const std::string& space, const Name& n, long depth) {
  std::string inner;
  if (space == "nat") {
    Int k(0);
    long cap = (1L << 20) + depth;
    while (n.bit(k) == 0) {
      ++k;
      if (k > cap)
        throw std::runtime_error("nat name: no terminator within " + std::to_string(cap) +
                                 " positions");
    }
    return json(k.str());
  }
  if (space == "real") {
    std::function<Rational(long)> view;
    if (n.has_approx()) {
      Name b = n;
      view = [b](long i) { return b.approx(i); };
    } else {
      view = bit_approx_view(n);
    }
    Rational prev;
    for (long i = 0; i <= depth; ++i) {
      Rational cur = view(i);
      if (i > 0) {
        Rational gap = boost::multiprecision::abs(Rational(cur - prev));
        if (gap >= Rational(1, pow2(i - 1)) + Rational(1, pow2(i)))
          throw std::runtime_error("real name: approximants at depths " + std::to_string(i - 1) +
                                   " and " + std::to_string(i) + " are not Cauchy-consistent");
      }
      prev = cur;
    }
    return json(rat_str(prev));
  }
  if (space == "cantor" || space == "cut") {
    std::string bits = n.prefix(depth);
    if (space == "cantor") return json(bits);
    auto one = bits.find('1');
    json j;
    j["stage"] = one == std::string::npos ? -1 : static_cast<long>(one);
    if (one != std::string::npos) j["tail_prefix"] = bits.substr(one + 1);
    return j;
  }
  if (space.rfind("finset:", 0) == 0) {
    long bound = std::stol(space.substr(7));
    long scan = (bound + 1) * (2 * bound + 6) + depth + 2;
    std::set<long> excluded;
    long last_zero = -1;  // rightmost 0 with only 1s after it so far
    for (long p = 0; p <= scan; ++p) {
      if (n.bit(p) == 0) {
        if (last_zero >= 0) {
          long k = p - last_zero - 1;
          if (k <= bound) excluded.insert(k);
        }
        last_zero = p;
      }
    }
    json elems = json::array();
    for (long k = 0; k <= bound; ++k)
      if (!excluded.count(k)) elems.push_back(k);
    return json{{"bound", bound}, {"elems", elems}};
  }
  if (space == "closed_unit") {
    std::function<std::optional<Ball>(long)> view;
    if (n.has_ball()) {
      Name b = n;
      view = [b](long s) { return b.ball(s); };
    } else {
      view = bit_ball_view(n);
    }
    json balls = json::array();
    for (long s = 0; s < depth; ++s) {
      auto o = view(s);
      if (o)
        balls.push_back(
            {{"slot", s}, {"center", rat_str(o->center)}, {"radius", rat_str(o->radius)}});
    }
    return json{{"slots", depth}, {"balls", balls}};
  }
  if (space == "aou_tree") {
    std::function<LevelRec(long)> view;
    if (n.has_level()) {
      Name b = n;
      view = [b](long l) { return b.level(l); };
    } else {
      view = bit_level_view(n);
    }
    json levels = json::array();
    for (long l = 1; l <= depth; ++l) {
      LevelRec r = view(l);
      if (r.full) {
        levels.push_back({{"level", l}, {"full", true}});
      } else {
        std::string node;
        for (int b : r.node) node.push_back(b ? '1' : '0');
        levels.push_back({{"level", l}, {"full", false}, {"node", node}});
      }
    }
    return json{{"levels", levels}};
  }
  if (detail::strip_wrapper(space, "tuple", inner)) {
    auto args = detail::split_args(inner);
    auto parts = untuple(n, args.size());
    json out = json::array();
    for (std::size_t i = 0; i < args.size(); ++i)
      out.push_back(decode_point(args[i], parts[i], depth));
    return out;
  }
  if (detail::strip_wrapper(space, "union", inner)) {
    auto [tag, payload] = project_union(n);
    return json{{"tag", tag}, {"inner", decode_point(inner, payload, depth)}};
  }
  if (detail::strip_wrapper(space, "coprod", inner)) {
    auto [tag, payload] = project_coproduct(n);
    return json{{"tag", tag.str()}, {"inner", decode_point(inner, payload, depth)}};
  }
  throw std::invalid_argument("decode_point: unknown space '" + space + "'");
}

// --- name (de)serialization ---

inline json name_to_json(const Name& n, long prefix_len) {
  json j;
  j["kind"] = n.kind();
  j["ground_truth"] = truth_ptr_to_json(n.truth());
  j["prefix"] = n.prefix(prefix_len);
  return j;
}

inline Name name_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  auto truth = truth_from_json(j.at("ground_truth"));
  const std::string prefix = j.value("prefix", std::string());
  if (truth) {
    Name n = encode_point(kind, *truth);
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      int want = prefix[i] == '1' ? 1 : 0;
      if (n.bit(static_cast<long>(i)) != want)
        throw std::runtime_error("name_from_json: stored prefix disagrees with ground truth at position " +
                                 std::to_string(i));
    }
    return n;
  }
  return with_derived_views(Name::from_bits(StreamDesc::prefix(prefix).fn, kind));
}

}  // namespace t2k
