#pragma once

#include <any>

#include "t2kit/name.hpp"

// The stream-program runtime. A program advances by steps; each step sees
// only the input positions whose reads it has already requested, emits zero
// or more output bits, and requests further reads. Output is append-only and
// every emitted bit depends only on the answered positions at that moment,
// which the read log records bucket by bucket. A program that stops emitting
// is cut off by the per-bit step budget and reported as divergent at the
// stalled output index.

namespace t2k {

struct ReadEvent {
  int input = 0;
  std::string unit;  // "bit:<pos>" here; structured units elsewhere
};
using ReadLog = std::vector<std::vector<ReadEvent>>;

class TapeView {
 public:
  explicit TapeView(std::size_t arity) : answers_(arity) {}

  bool known(int input, const Int& pos) const {
    return answers_[static_cast<std::size_t>(input)].count(pos) != 0;
  }
  int at(int input, const Int& pos) const {
    auto& m = answers_[static_cast<std::size_t>(input)];
    auto it = m.find(pos);
    if (it == m.end())
      throw std::logic_error("TapeView: position " + pos.str() + " of input " +
                             std::to_string(input) + " has not been read");
    return it->second;
  }
  int at(int input, long pos) const { return at(input, Int(pos)); }
  bool known(int input, long pos) const { return known(input, Int(pos)); }

  void record(int input, const Int& pos, int bit) {
    answers_[static_cast<std::size_t>(input)][pos] = bit;
  }
  std::size_t arity() const { return answers_.size(); }

 private:
  std::vector<std::map<Int, int>> answers_;
};

struct StepResult {
  std::string emit;                        // bits to append, "" for none
  std::vector<std::pair<int, Int>> reads;  // (input, position) requests
  bool halt = false;                       // program promises no further output
};

struct TransformerProgram {
  std::string note;
  std::function<std::any()> init = [] { return std::any{}; };
  std::function<StepResult(const TapeView&, std::any&)> step;
};

struct RunConfig {
  long budget_per_bit = 1'000'000;
};

struct RunResult {
  std::string bits;
  ReadLog log;  // log[j]: reads answered after bit j-1 and before bit j
  bool diverged = false;
  bool halted = false;
  long stalled_index = -1;
  long total_steps = 0;
};

inline RunResult run_transformer(const TransformerProgram& prog, const std::vector<Name>& inputs,
                                 long output_length, RunConfig cfg = {}) {
  if (!prog.step) throw std::invalid_argument("run_transformer: program has no step function");
  RunResult res;
  TapeView view(inputs.size());
  std::any state = prog.init ? prog.init() : std::any{};
  std::vector<ReadEvent> bucket;
  long since_emit = 0;
  while (static_cast<long>(res.bits.size()) < output_length) {
    if (since_emit >= cfg.budget_per_bit) {
      res.diverged = true;
      res.stalled_index = static_cast<long>(res.bits.size());
      break;
    }
    ++since_emit;
    ++res.total_steps;
    StepResult r = prog.step(view, state);
    // emitted bits were decided from the view as the step saw it, so they are
    // logged against the reads answered so far; this step's new requests only
    // support later bits
    for (char c : r.emit) {
      if (c != '0' && c != '1')
        throw std::logic_error("run_transformer: program emitted a non-bit");
      if (static_cast<long>(res.bits.size()) >= output_length) break;
      res.bits.push_back(c);
      res.log.push_back(bucket);
      bucket.clear();
      since_emit = 0;
    }
    for (auto& [i, pos] : r.reads) {
      if (i < 0 || static_cast<std::size_t>(i) >= inputs.size())
        throw std::out_of_range("run_transformer: read from input " + std::to_string(i));
      if (!view.known(i, pos)) {
        view.record(i, pos, inputs[static_cast<std::size_t>(i)].bit(pos));
        bucket.push_back(ReadEvent{i, "bit:" + pos.str()});
      }
    }
    if (r.halt) {
      res.halted = true;
      break;
    }
  }
  return res;
}

// --- stock programs ---

inline TransformerProgram prog_identity() {
  TransformerProgram p;
  p.note = "copy input 0";
  p.init = [] { return std::any(Int(0)); };
  p.step = [](const TapeView& v, std::any& st) {
    Int& k = *std::any_cast<Int>(&st);
    StepResult r;
    if (v.known(0, k)) {
      r.emit = v.at(0, k) ? "1" : "0";
      ++k;
    }
    r.reads.emplace_back(0, k);
    return r;
  };
  return p;
}

inline TransformerProgram prog_const(const std::string& bits, bool then_zeros = true) {
  TransformerProgram p;
  p.note = "constant";
  p.init = [] { return std::any(long(0)); };
  p.step = [bits, then_zeros](const TapeView&, std::any& st) {
    long& k = *std::any_cast<long>(&st);
    StepResult r;
    if (k < static_cast<long>(bits.size()))
      r.emit = bits[static_cast<std::size_t>(k)];
    else if (then_zeros)
      r.emit = "0";
    else
      r.halt = true;
    ++k;
    return r;
  };
  return p;
}

/// Positionwise AND of two inputs.
inline TransformerProgram prog_and() {
  TransformerProgram p;
  p.note = "bitwise and";
  p.init = [] { return std::any(Int(0)); };
  p.step = [](const TapeView& v, std::any& st) {
    Int& k = *std::any_cast<Int>(&st);
    StepResult r;
    if (v.known(0, k) && v.known(1, k)) {
      r.emit = (v.at(0, k) & v.at(1, k)) ? "1" : "0";
      ++k;
    }
    r.reads.emplace_back(0, k);
    r.reads.emplace_back(1, k);
    return r;
  };
  return p;
}

/// Reads ever deeper without emitting anything; exists to trip the budget.
inline TransformerProgram prog_search_forever() {
  TransformerProgram p;
  p.note = "unbounded search";
  p.init = [] { return std::any(Int(0)); };
  p.step = [](const TapeView&, std::any& st) {
    Int& k = *std::any_cast<Int>(&st);
    StepResult r;
    r.reads.emplace_back(0, k);
    ++k;
    return r;
  };
  return p;
}

}  // namespace t2k
