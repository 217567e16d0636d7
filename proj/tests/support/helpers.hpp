#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mcrace/ast.hpp"
#include "mcrace/model.hpp"
#include "mcrace/oracle.hpp"

namespace mcrace::testing {

bool contains_sugar(const Ast& ast);

// Location kinds reachable from the initial location, in DFS preorder.
std::vector<LocalKind> reachable_kinds(const ThreadModel& t);

// Some cycle of the local graph, or empty. With skip_r, R locations are
// removed first.
std::vector<Pc> find_cycle(const ThreadModel& t, bool skip_r = false);

// Canonical text of a lowered program, for structural comparison.
std::string fingerprint(const ProgramModel& m);

// Exhaustive enumeration of executions without any state merging: every
// maximal statement sequence is replayed and checked with the explicit
// happens-before closure. Independent of both explorers.
struct BruteForce {
  bool racy = false;
  std::set<GlobalState> finals;  // end states of maximal executions
  uint64_t executions = 0;
  bool truncated = false;
};

BruteForce brute_force(const ProgramModel& m, uint64_t max_executions = 200000, size_t max_length = 64);

// Random maximal (or length-capped) execution from the initial state.
std::vector<StmtId> random_execution(const ProgramModel& m, std::mt19937_64& rng, size_t max_length = 64);

// States reached along random executions, for sampling.
std::vector<GlobalState> sample_states(const ProgramModel& m, std::mt19937_64& rng, size_t count);

// Fixed corpus location.
std::string corpus_dir();
std::string programs_dir();
std::string read_file(const std::string& path);

}  // namespace mcrace::testing
