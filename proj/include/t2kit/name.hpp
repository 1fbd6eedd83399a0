#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "t2kit/nu_q.hpp"
#include "t2kit/prng.hpp"
#include "t2kit/rational.hpp"

// Names: infinite binary sequences presented as total deterministic bit
// generators. A name may carry a hidden ground truth (what point it encodes)
// and structured views (approximant stream, ball stream, tree levels) that
// expose the same information as the bits without materializing unary blocks
// whose lengths grow like 4^i. Consumers that can work from a view should;
// the bit generator is the ground-level fallback and the two are checked
// against each other in the test suite at small depth.

namespace t2k {

// --- infinite bit streams with a serializable description ---

struct StreamDesc {
  std::string spec;
  std::function<int(const Int&)> fn;

  int bit(const Int& i) const { return fn(i); }
  int bit(long i) const { return fn(Int(i)); }
  bool serializable() const { return spec != "opaque"; }

  static StreamDesc zeros() {
    return {"zeros", [](const Int&) { return 0; }};
  }
  static StreamDesc ones() {
    return {"ones", [](const Int&) { return 1; }};
  }
  /// Given bits, then zeros forever.
  static StreamDesc prefix(const std::string& bits) {
    check_bits(bits);
    return {"prefix:" + bits, [bits](const Int& i) {
              if (i < Int(bits.size())) return bits[i.convert_to<std::size_t>()] == '1' ? 1 : 0;
              return 0;
            }};
  }
  static StreamDesc periodic(const std::string& bits) {
    check_bits(bits);
    if (bits.empty()) throw std::invalid_argument("periodic: empty period");
    return {"periodic:" + bits, [bits](const Int& i) {
              Int r = i % Int(bits.size());
              return bits[r.convert_to<std::size_t>()] == '1' ? 1 : 0;
            }};
  }
  static StreamDesc seeded(std::uint64_t seed) {
    return {"seeded:" + std::to_string(seed), [seed](const Int& i) {
              Int w = i >> 6;
              auto k = (w % Int(std::uint64_t(1) << 62)).convert_to<std::uint64_t>();
              Prng g(seed ^ (k * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL));
              return static_cast<int>((g.next() >> (i % 64).convert_to<unsigned>()) & 1);
            }};
  }
  static StreamDesc opaque(std::function<int(const Int&)> f) { return {"opaque", std::move(f)}; }

  static StreamDesc parse(const std::string& s) {
    if (s == "zeros") return zeros();
    if (s == "ones") return ones();
    if (s.rfind("prefix:", 0) == 0) return prefix(s.substr(7));
    if (s.rfind("periodic:", 0) == 0) return periodic(s.substr(9));
    if (s.rfind("seeded:", 0) == 0) return seeded(std::stoull(s.substr(7)));
    throw std::invalid_argument("StreamDesc: cannot parse '" + s + "'");
  }

 private:
  static void check_bits(const std::string& b) {
    for (char c : b)
      if (c != '0' && c != '1') throw std::invalid_argument("StreamDesc: non-bit character");
  }
};

// --- ground truths ---

struct Ball {
  Rational center;
  Rational radius;
};

struct LevelRec {
  bool full = true;
  std::vector<int> node;  // the unique node at this level when not full
};

struct Truth;

struct NatTruth {
  Int value;
};
struct RatTruth {
  Rational value;
};
struct SetTruth {
  long bound = 0;  // subset of {0, ..., bound}
  std::set<long> elems;
};
struct StreamTruth {
  StreamDesc s;
};
/// Closed subset of [0,1] that is either everything or one point.
struct UnitSetTruth {
  bool is_all = true;
  Rational point;
  long collapse_slot = -1;  // first ball appears at this slot
};
/// Binary tree with all-or-unique levels.
struct TreeTruth {
  bool is_full = true;
  long collapse_level = -1;  // first singleton level
  StreamDesc path = StreamDesc::zeros();
};
/// Stream of the form 0^stage 1 tail, or all zeros when stage = -1.
struct CutTruth {
  long stage = -1;
  StreamDesc tail = StreamDesc::zeros();
};
struct TupleTruth {
  std::vector<std::shared_ptr<const Truth>> parts;  // entries may be null
};
struct TagTruth {
  Int tag;
  std::shared_ptr<const Truth> inner;  // may be null
};

using TruthVar = std::variant<NatTruth, RatTruth, SetTruth, StreamTruth, UnitSetTruth,
                              TreeTruth, CutTruth, TupleTruth, TagTruth>;
struct Truth : TruthVar {
  using TruthVar::TruthVar;
  const TruthVar& var() const { return *this; }
};

template <class T>
std::shared_ptr<const Truth> make_truth(T&& t) {
  return std::make_shared<const Truth>(Truth(std::forward<T>(t)));
}

template <class T>
const T* truth_as(const std::shared_ptr<const Truth>& p) {
  if (!p) return nullptr;
  return std::get_if<T>(&p->var());
}

// --- the name itself ---

class Name;

struct NameImpl {
  std::function<int(const Int&)> gen;
  std::string kind;
  std::shared_ptr<const Truth> truth;

  // structural decomposition when built by tuple/inject, for exact inverses
  std::string shape;  // "", "tuple", "tag"
  std::vector<Name> parts;
  Int tag_prefix_len{0};  // bits to skip before the payload of a "tag" name

  // structured views (any may be absent)
  std::function<Rational(long)> approx;
  std::function<std::optional<Ball>(long)> ball;
  std::function<LevelRec(long)> level;

  // read accounting
  mutable std::mutex mu;
  mutable std::map<Int, int> cache;
  mutable Int horizon{-1};
  mutable long bit_reads{0};
};

class Name {
 public:
  Name() = default;
  explicit Name(std::shared_ptr<NameImpl> impl) : impl_(std::move(impl)) {}

  static Name from_bits(std::function<int(const Int&)> gen, std::string kind,
                        std::shared_ptr<const Truth> truth = nullptr) {
    auto impl = std::make_shared<NameImpl>();
    impl->gen = std::move(gen);
    impl->kind = std::move(kind);
    impl->truth = std::move(truth);
    return Name(impl);
  }
  static Name from_stream(const StreamDesc& s, std::string kind = "cantor") {
    return from_bits(s.fn, std::move(kind), make_truth(StreamTruth{s}));
  }

  bool valid() const { return static_cast<bool>(impl_); }

  int bit(const Int& pos) const {
    auto& im = *impl_;
    std::unique_lock lk(im.mu);
    if (pos <= Int(1) << 16) {
      auto it = im.cache.find(pos);
      if (it != im.cache.end()) return it->second;
    }
    ++im.bit_reads;
    if (pos > im.horizon) im.horizon = pos;
    lk.unlock();
    int b = im.gen(pos);
    if (b != 0 && b != 1) throw std::logic_error("Name: generator returned a non-bit");
    if (pos <= Int(1) << 16) {
      std::scoped_lock lk2(im.mu);
      im.cache.emplace(pos, b);
    }
    return b;
  }
  int bit(long pos) const { return bit(Int(pos)); }

  std::string prefix(long len) const {
    std::string out;
    out.reserve(static_cast<std::size_t>(len));
    for (long i = 0; i < len; ++i) out.push_back(bit(i) ? '1' : '0');
    return out;
  }

  const std::string& kind() const { return impl_->kind; }
  const std::shared_ptr<const Truth>& truth() const { return impl_->truth; }

  bool has_approx() const { return static_cast<bool>(impl_->approx); }
  bool has_ball() const { return static_cast<bool>(impl_->ball); }
  bool has_level() const { return static_cast<bool>(impl_->level); }

  Rational approx(long i) const {
    if (!impl_->approx) throw std::logic_error("Name: no approximant view on " + impl_->kind);
    return impl_->approx(i);
  }
  std::optional<Ball> ball(long slot) const {
    if (!impl_->ball) throw std::logic_error("Name: no ball view on " + impl_->kind);
    return impl_->ball(slot);
  }
  LevelRec level(long l) const {
    if (!impl_->level) throw std::logic_error("Name: no level view on " + impl_->kind);
    return impl_->level(l);
  }

  Int horizon() const {
    std::scoped_lock lk(impl_->mu);
    return impl_->horizon;
  }
  long bit_reads() const {
    std::scoped_lock lk(impl_->mu);
    return impl_->bit_reads;
  }

  NameImpl& raw() { return *impl_; }
  const NameImpl& raw() const { return *impl_; }
  const std::shared_ptr<NameImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<NameImpl> impl_;
};

// --- block-structured generators ---

/// Bit generator assembled from consecutive blocks. Block lengths are given
/// lazily; a negative length marks the final, infinite block. Boundaries are
/// cached so random access costs one boundary scan.
class BlockTable {
 public:
  BlockTable(std::function<Int(long)> len, std::function<int(long, const Int&)> bit_in)
      : len_(std::move(len)), bit_in_(std::move(bit_in)) {
    starts_ = std::make_shared<Starts>();
    starts_->v.push_back(Int(0));
  }

  int bit(const Int& pos) const {
    auto& st = *starts_;
    std::scoped_lock lk(st.mu);
    long b = 0;
    // grow the table until the block containing pos is known
    while (true) {
      if (st.infinite_from >= 0 && pos >= st.v[static_cast<std::size_t>(st.infinite_from)]) {
        b = st.infinite_from;
        break;
      }
      if (st.v.back() > pos) {
        auto it = std::upper_bound(st.v.begin(), st.v.end(), pos);
        b = static_cast<long>(it - st.v.begin()) - 1;
        break;
      }
      long next = static_cast<long>(st.v.size()) - 1;
      Int l = len_(next);
      if (l < 0) {
        st.infinite_from = next;
        continue;
      }
      st.v.push_back(st.v.back() + l);
    }
    Int off = pos - st.v[static_cast<std::size_t>(b)];
    return bit_in_(b, off);
  }

  std::function<int(const Int&)> as_fn() const {
    BlockTable copy = *this;
    return [copy](const Int& p) { return copy.bit(p); };
  }

 private:
  struct Starts {
    std::mutex mu;
    std::vector<Int> v;      // v[b] = first position of block b
    long infinite_from = -1;  // block index whose length is infinite
  };
  std::function<Int(long)> len_;
  std::function<int(long, const Int&)> bit_in_;
  std::shared_ptr<Starts> starts_;
};

// --- pairing on naturals (ball indices) ---

inline Int pair_nat(const Int& a, const Int& b) { return (a + b) * (a + b + 1) / 2 + b; }

inline std::pair<Int, Int> unpair_nat(const Int& z) {
  Int w = (boost::multiprecision::sqrt(Int(8 * z + 1)) - 1) / 2;
  Int t = w * (w + 1) / 2;
  while (t > z) {
    --w;
    t = w * (w + 1) / 2;
  }
  while ((w + 1) * (w + 2) / 2 <= z) {
    ++w;
    t = w * (w + 1) / 2;
  }
  Int b = z - t;
  return {w - b, b};
}

/// Bijection from naturals onto the positive rationals.
inline Rational positive_rational_enumeration(const Int& i) {
  return rational_enumeration(2 * i + 1);
}
inline Int positive_rational_index(const Rational& q) {
  if (q <= 0) throw std::domain_error("positive_rational_index: nonpositive");
  return (index_of(q) - 1) / 2;
}

}  // namespace t2k
