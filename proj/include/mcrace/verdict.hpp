#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcrace/model.hpp"
#include "mcrace/semantics.hpp"

namespace mcrace {

enum class Verdict : uint8_t { RaceFree, Racy, Unknown };

const char* to_string(Verdict v);  // "race_free", "racy", "unknown"

enum class WitnessPolicy : uint8_t { First, All };

struct ExploreLimits {
  uint64_t max_states = 5'000'000;
  uint64_t max_depth = 100'000;
  double time_limit_seconds = 0;  // 0: none
};

struct ExploreOptions {
  ExploreLimits limits;
  WitnessPolicy policy = WitnessPolicy::First;
  // Keep the explored node/edge structure (needed by validate_density and
  // count_maximal_paths).
  bool record_graph = false;
};

struct Access {
  StmtId statement = 0;
  Tid tid = 0;
  bool write = false;
  SourceSpan span;
  std::string text;
};

struct Witness {
  Slot slot = 0;
  std::string location;  // "x", "a[1]"
  Tid thread_a = 0;
  Tid thread_b = 0;
  Access access_a;
  Access access_b;
  std::vector<StmtId> path;  // from the initial state through the racing step
};

struct ExploreStats {
  uint64_t nodes = 0;
  uint64_t edges = 0;
  uint64_t max_depth_reached = 0;
  double millis = 0;
};

struct ExploredNode {
  std::vector<StmtId> enabled;
  std::vector<StmtId> ample;       // statements with an outgoing edge
  std::vector<uint32_t> targets;   // parallel to ample; index into nodes
};

struct ExploredGraph {
  std::vector<ExploredNode> nodes;  // nodes[0] is the initial node
};

struct RaceVerdict {
  Verdict verdict = Verdict::Unknown;
  std::vector<Witness> witnesses;
  ExploreStats stats;
  std::vector<GlobalState> final_states;  // enabled = ∅, sorted, unique
  std::vector<RuntimeFault> faults;
  std::string incomplete;                 // limit name when verdict is Unknown
  std::optional<ExploredGraph> graph;

  bool racy() const { return verdict == Verdict::Racy; }
};

// Number of maximal paths from node 0, or nullopt if a cycle is reachable.
// Saturates at 2^64-1.
std::optional<uint64_t> count_maximal_paths(const ExploredGraph& graph);

}  // namespace mcrace
