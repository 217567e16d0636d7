#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcrace/model.hpp"

namespace mcrace {

// Reported separately from races. The faulting thread moves to its fault
// location and stops; the other threads continue.
struct RuntimeFault {
  Tid tid = 0;
  StmtId statement = 0;
  SourceSpan span;
  std::string message;

  bool operator==(const RuntimeFault&) const = default;
};

struct StepResult {
  GlobalState state;
  Footprint footprint;
  std::optional<RuntimeFault> fault;
};

struct TransitionRecord {
  StmtId statement = 0;
  GlobalState source;
  GlobalState target;
  Footprint footprint;
};

std::vector<StmtId> enabled_for_thread(const ProgramModel& program, const GlobalState& state, Tid tid);

// Ascending tid, declaration order within a thread.
std::vector<StmtId> enabled(const ProgramModel& program, const GlobalState& state);

bool is_enabled(const ProgramModel& program, const GlobalState& state, StmtId stmt);

// Precondition: stmt is enabled at state.
StepResult execute(const ProgramModel& program, const GlobalState& state, StmtId stmt);

}  // namespace mcrace
