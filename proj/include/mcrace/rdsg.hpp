#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcrace/model.hpp"
#include "mcrace/semantics.hpp"
#include "mcrace/verdict.hpp"

namespace mcrace {

// A global state paired with, per thread, the shared locations read and
// written since that thread last left a yield point (R_i) or a barrier
// released everyone.
struct RdsgNode {
  GlobalState state;
  std::vector<Footprint> access;  // index tid-1

  bool operator==(const RdsgNode&) const = default;
};

uint64_t canonical_hash(const RdsgNode& node);

struct RdsgNodeHash {
  size_t operator()(const RdsgNode& n) const { return static_cast<size_t>(canonical_hash(n)); }
};

RdsgNode initial_node(const ProgramModel& program);

struct Detection {
  Slot slot = 0;
  Tid thread = 0;  // executing thread i
  Tid other = 0;   // j ≠ i
};

struct RdsgEdge {
  StmtId statement = 0;
  RdsgNode target;
  Footprint footprint;
  std::optional<Detection> detection;
  bool detects() const { return detection.has_value(); }
};

struct SuccessorOptions {
  bool clear_access = true;  // false only to probe that density ignores access bookkeeping
};

// The schedulable statements at a state: all enabled statements of the
// minimal-tid normal thread if one exists, else every enabled statement.
std::vector<StmtId> ample(const ProgramModel& program, const GlobalState& state);

std::vector<RdsgEdge> successors(const ProgramModel& program, const RdsgNode& node,
                                 std::vector<RuntimeFault>* faults = nullptr,
                                 const SuccessorOptions& options = {});

// Race check for an edge executing `stmt` into `target`: fires when the
// executing thread arrives at an R_i, Barrier or Term location and its access
// sets conflict with another thread's. First witness in (j, slot) order.
std::optional<Detection> detects_race(const ProgramModel& program, StmtId stmt, const RdsgNode& target);

struct CheckOptions {
  ExploreOptions explore;
  SuccessorOptions successor;
  // Experimental: skip a node whose access sets are component-wise subsets
  // of a visited node with the same state.
  bool subsume_access = false;
};

RaceVerdict check(const ProgramModel& program, const CheckOptions& options = {});

struct DensityViolation {
  uint32_t node = 0;
  int condition = 0;  // 1..4
  std::string message;
};

struct DensityReport {
  std::vector<DensityViolation> violations;
  bool ok() const { return violations.empty(); }
};

DensityReport validate_density(const ProgramModel& program, const ExploredGraph& graph);

}  // namespace mcrace
