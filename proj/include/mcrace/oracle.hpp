#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mcrace/model.hpp"
#include "mcrace/semantics.hpp"
#include "mcrace/verdict.hpp"

namespace mcrace {

// Brute-force ground truth: full interleaving exploration with
// happens-before race detection. No reduction.

struct Event {
  StmtId statement = 0;
  Tid tid = 0;
  uint32_t seq = 0;   // 1-based position among this thread's events
  size_t index = 0;   // 0-based position in the trace
  Statement::Kind kind = Statement::Kind::Nsync;
  LockId lock = 0;
  Footprint footprint;
};

struct Trace {
  GlobalState initial;
  std::vector<Event> events;
  std::vector<GlobalState> post_states;  // post_states[k] follows events[k]
};

// Replays statements from `initial`. Throws std::invalid_argument if a
// statement is not enabled.
Trace make_trace(const ProgramModel& program, const GlobalState& initial,
                 const std::vector<StmtId>& statements);

// Explicit happens-before over one trace: three base relations and their
// transitive closure, as n×n boolean matrices indexed by trace position.
class HbRelation {
 public:
  HbRelation() = default;
  explicit HbRelation(size_t n);

  size_t size() const { return n_; }
  bool program_order(size_t a, size_t b) const { return po_[a * n_ + b]; }
  bool release_acquire(size_t a, size_t b) const { return ra_[a * n_ + b]; }
  bool barrier(size_t a, size_t b) const { return bar_[a * n_ + b]; }
  bool ordered(size_t a, size_t b) const { return closure_[a * n_ + b]; }

 private:
  friend HbRelation happens_before(const ProgramModel&, const Trace&);
  size_t n_ = 0;
  std::vector<bool> po_, ra_, bar_, closure_;
};

HbRelation happens_before(const ProgramModel& program, const Trace& trace);

// Number of barrier exits of the event's thread up to and including it.
std::vector<uint32_t> epochs(const Trace& trace);

std::optional<Slot> conflicts(const Event& a, const Event& b);

struct RacePair {
  size_t first = 0;   // trace index, first < second
  size_t second = 0;
  Slot slot = 0;

  bool operator==(const RacePair&) const = default;
  auto operator<=>(const RacePair&) const = default;
};

// All racing event pairs, via the explicit closure. Sorted.
std::vector<RacePair> has_race(const ProgramModel& program, const Trace& trace);

// Same relation via incremental vector clocks; the explorer's witness path.
std::vector<RacePair> has_race_incremental(const ProgramModel& program, const Trace& trace);

// Finite summary of the happens-before frontier along one execution: for each
// thread k and each observer (a thread, or the last release of a lock), the
// shared accesses of k that are not yet ordered before that observer. A new
// access of thread i races iff it conflicts with what some k≠i has pending
// for i. Thread k's unordered accesses always form a suffix of its history,
// so merging through intersection stays exact.
class HbFrontier {
 public:
  explicit HbFrontier(const ProgramModel& program);

  // Applies one executed statement. Returns the racing thread and slot of the
  // first conflict with another thread's pending accesses.
  struct Race {
    Tid other = 0;
    Slot slot = 0;
  };
  std::optional<Race> step(const Statement& stmt, const Footprint& footprint);

  bool operator==(const HbFrontier&) const = default;
  uint64_t hash() const;

 private:
  Footprint& pending(Tid owner, uint32_t observer) { return pending_[(owner - 1) * observers_ + observer]; }
  uint32_t threads_ = 0;
  uint32_t observers_ = 0;  // threads, then locks
  std::vector<Footprint> pending_;
  std::vector<Footprint> since_exit_;
  std::vector<uint8_t> epoch_;  // normalized: min over threads is 0
};

RaceVerdict explore_full(const ProgramModel& program, const ExploreOptions& options = {});

}  // namespace mcrace
