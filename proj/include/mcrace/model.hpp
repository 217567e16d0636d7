#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcrace/ast.hpp"

namespace mcrace {

using Tid = uint32_t;     // 1..N; 0 is "no thread" (free lock)
using LockId = uint32_t;
using StmtId = uint32_t;
using Pc = uint32_t;      // index into a thread's location table
using Slot = uint32_t;    // index into the flat shared store

inline constexpr Tid kNoThread = 0;
inline constexpr uint32_t kMaxThreads = 64;

enum class LocalKind : uint8_t { Acquire, Release, Barrier, Nsync, Term };

const char* to_string(LocalKind k);

struct MemLocation {
  uint32_t var = 0;
  std::optional<uint32_t> index;

  auto operator<=>(const MemLocation&) const = default;
};

struct VarInfo {
  std::string name;
  bool is_array = false;
  uint32_t length = 1;
  Slot offset = 0;
};

struct SharedLayout {
  std::vector<VarInfo> vars;
  uint32_t size = 0;

  std::optional<uint32_t> find(const std::string& name) const;
  MemLocation location(Slot slot) const;
  Slot slot(const MemLocation& loc) const;
  // "x" or "a[2]"
  std::string describe(Slot slot) const;
};

// Shared locations read and written by one statement instance, or
// accumulated over a sequence of them. Both vectors are sorted and unique.
struct Footprint {
  std::vector<Slot> reads;
  std::vector<Slot> writes;

  bool empty() const { return reads.empty() && writes.empty(); }
  void add_read(Slot s);
  void add_write(Slot s);
  void merge(const Footprint& other);
  void clear() {
    reads.clear();
    writes.clear();
  }
  // Smallest slot in (W∩W') ∪ (W∩R') ∪ (R∩W'), if any.
  std::optional<Slot> conflict_with(const Footprint& other) const;
  // Component-wise inclusion.
  bool subset_of(const Footprint& other) const;

  bool operator==(const Footprint&) const = default;
};

// Compiled expression over resolved storage.
struct Code {
  enum class Op : uint8_t {
    Const, Local, Shared, SharedIndex,
    Neg, Not,
    Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or,
  };

  Op op = Op::Const;
  int64_t value = 0;  // Const
  uint32_t ref = 0;   // Local: local index in thread; Shared/SharedIndex: var id
  std::vector<Code> args;
  SourceSpan span;
};

struct Target {
  enum class Kind : uint8_t { Local, Shared, SharedIndex };
  Kind kind = Kind::Local;
  uint32_t ref = 0;
  std::optional<Code> index;
};

struct Effect {
  enum class Kind : uint8_t { Nop, Assign, Branch };
  Kind kind = Kind::Nop;
  Target target;  // Assign
  Code value;     // Assign: value; Branch: condition
  Pc next = 0;    // Nop, Assign, Branch-taken
  Pc else_next = 0;
};

struct Statement {
  enum class Kind : uint8_t { Acquire, Release, Exit, Nsync };

  StmtId id = 0;
  Tid tid = 0;
  Kind kind = Kind::Nsync;
  LockId lock = 0;
  Effect effect;
  SourceSpan span;
  std::string text;

  bool is_nsync() const { return kind == Kind::Nsync; }
};

struct Location {
  LocalKind kind = LocalKind::Term;
  Pc next = 0;       // Acquire, Release, Barrier
  LockId lock = 0;   // Acquire, Release
  std::vector<StmtId> stmts;  // nonempty except for Term
  bool yield = false;
  std::vector<Pc> edges;  // local graph successors
  SourceSpan span;
};

struct ThreadModel {
  Tid tid = 0;
  std::vector<Location> locations;
  Pc initial = 0;
  std::vector<std::string> local_names;
  uint32_t local_offset = 0;  // first local of this thread in GlobalState::locals
  std::vector<bool> r_set;    // R_i, indexed by Pc
  Pc fault_pc = 0;            // terminal location entered by a faulting statement

  bool in_r(Pc pc) const { return r_set[pc]; }
};

struct GlobalState {
  std::vector<Pc> pcs;          // index tid-1
  std::vector<int64_t> locals;  // thread-local variables of all threads
  std::vector<int64_t> shared;
  std::vector<Tid> lock_owner;  // kNoThread when free
  uint64_t wait_set = 0;        // bit tid-1

  bool waiting(Tid t) const { return (wait_set >> (t - 1)) & 1u; }

  bool operator==(const GlobalState&) const = default;
  auto operator<=>(const GlobalState&) const = default;
};

// Stable across runs and platforms: hashes fields in a fixed order as
// little-endian 64-bit words.
uint64_t canonical_hash(const GlobalState& s);

struct GlobalStateHash {
  size_t operator()(const GlobalState& s) const { return static_cast<size_t>(canonical_hash(s)); }
};

struct ProgramModel {
  std::string name;
  std::vector<std::string> locks;
  SharedLayout layout;
  std::vector<ThreadModel> threads;    // threads[i].tid == i + 1
  std::vector<Statement> statements;   // statements[id].id == id
  std::vector<int64_t> initial_shared;
  std::map<std::string, int64_t> inputs;
  uint32_t total_locals = 0;

  uint32_t num_threads() const { return static_cast<uint32_t>(threads.size()); }
  uint64_t all_threads_mask() const;
  const ThreadModel& thread(Tid t) const { return threads[t - 1]; }
  const Statement& statement(StmtId id) const { return statements[id]; }
  const Location& location(Tid t, Pc pc) const { return threads[t - 1].locations[pc]; }
  LocalKind kind_at(const GlobalState& s, Tid t) const { return location(t, s.pcs[t - 1]).kind; }
  bool in_r(const GlobalState& s, Tid t) const { return thread(t).in_r(s.pcs[t - 1]); }

  GlobalState initial_state() const;
  // Checks the structural invariants; throws std::logic_error on violation.
  void validate() const;
  std::string describe(const GlobalState& s) const;
};

// Local state not in R_i and at least one enabled statement.
bool is_normal(const ProgramModel& program, const GlobalState& state, Tid tid);

}  // namespace mcrace
