#include "mcrace/rdsg.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "mcrace/oracle.hpp"

namespace mcrace {

uint64_t canonical_hash(const RdsgNode& node) {
  uint64_t h = canonical_hash(node.state);
  auto mix = [&h](uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  for (const auto& a : node.access) {
    mix(a.reads.size());
    for (Slot s : a.reads) mix(s);
    mix(a.writes.size() | (uint64_t{1} << 40));
    for (Slot s : a.writes) mix(s);
  }
  return h;
}

RdsgNode initial_node(const ProgramModel& program) {
  return RdsgNode{program.initial_state(), std::vector<Footprint>(program.num_threads())};
}

std::vector<StmtId> ample(const ProgramModel& program, const GlobalState& state) {
  for (Tid t = 1; t <= program.num_threads(); ++t) {
    if (program.in_r(state, t)) continue;
    auto mine = enabled_for_thread(program, state, t);
    if (!mine.empty()) return mine;
  }
  return enabled(program, state);
}

namespace {

// The first exit from a completed barrier: every thread waits at a barrier
// location and the wait set has just been emptied.
bool releases_barrier(const ProgramModel& program, const GlobalState& state, const Statement& stmt) {
  if (stmt.kind != Statement::Kind::Exit || state.wait_set != 0) return false;
  for (Tid t = 1; t <= program.num_threads(); ++t)
    if (program.kind_at(state, t) != LocalKind::Barrier) return false;
  return true;
}

}  // namespace

std::optional<Detection> detects_race(const ProgramModel& program, StmtId stmt, const RdsgNode& target) {
  const Tid i = program.statement(stmt).tid;
  const GlobalState& s = target.state;
  LocalKind kind = program.kind_at(s, i);
  if (!program.in_r(s, i) && kind != LocalKind::Barrier && kind != LocalKind::Term) return std::nullopt;
  const Footprint& mine = target.access[i - 1];
  if (mine.empty()) return std::nullopt;
  for (Tid j = 1; j <= program.num_threads(); ++j) {
    if (j == i) continue;
    if (auto slot = mine.conflict_with(target.access[j - 1])) return Detection{*slot, i, j};
  }
  return std::nullopt;
}

std::vector<RdsgEdge> successors(const ProgramModel& program, const RdsgNode& node,
                                 std::vector<RuntimeFault>* faults, const SuccessorOptions& options) {
  std::vector<RdsgEdge> out;
  for (StmtId t : ample(program, node.state)) {
    const Statement& st = program.statement(t);
    StepResult r = execute(program, node.state, t);
    if (r.fault && faults) faults->push_back(*r.fault);
    RdsgEdge e;
    e.statement = t;
    e.target.state = std::move(r.state);
    e.target.access = node.access;
    if (options.clear_access && releases_barrier(program, node.state, st)) {
      for (auto& a : e.target.access) a.clear();
    } else {
      Footprint& mine = e.target.access[st.tid - 1];
      if (options.clear_access && program.in_r(node.state, st.tid)) mine.clear();
      mine.merge(r.footprint);
    }
    e.footprint = std::move(r.footprint);
    e.detection = detects_race(program, t, e.target);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

class RdsgExplorer {
 public:
  RdsgExplorer(const ProgramModel& program, const CheckOptions& options) : program_(program), options_(options) {}

  RaceVerdict run() {
    auto start = std::chrono::steady_clock::now();
    const ExploreOptions& opt = options_.explore;
    if (opt.record_graph) verdict_.graph.emplace();

    push(initial_node(program_), std::nullopt);
    while (!stack_.empty()) {
      Frame& top = stack_.back();
      if (top.next == top.edges.size()) {
        stack_.pop_back();
        continue;
      }
      RdsgEdge edge = std::move(top.edges[top.next++]);
      uint32_t from = top.node;
      ++verdict_.stats.edges;
      if (edge.detection) {
        record_witness(edge);
        if (opt.policy == WitnessPolicy::First) break;
      }
      auto found = visited_.find(edge.target);
      if (found != visited_.end()) {
        link(from, edge.statement, found->second);
        continue;
      }
      if (options_.subsume_access && subsumed(edge.target)) continue;
      if (visited_.size() >= opt.limits.max_states) {
        verdict_.incomplete = "max_states";
        break;
      }
      if (stack_.size() > opt.limits.max_depth) {
        verdict_.incomplete = "max_depth";
        break;
      }
      if (opt.limits.time_limit_seconds > 0 && (visited_.size() & 0x3fff) == 0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >
              opt.limits.time_limit_seconds) {
        verdict_.incomplete = "time_limit";
        break;
      }
      StmtId t = edge.statement;
      uint32_t to = push(std::move(edge.target), t);
      link(from, t, to);
    }

    verdict_.stats.nodes = visited_.size();
    verdict_.stats.max_depth_reached = max_depth_;
    verdict_.final_states.assign(finals_.begin(), finals_.end());
    if (!verdict_.witnesses.empty())
      verdict_.verdict = Verdict::Racy;
    else if (!verdict_.incomplete.empty())
      verdict_.verdict = Verdict::Unknown;
    else
      verdict_.verdict = Verdict::RaceFree;
    verdict_.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return std::move(verdict_);
  }

 private:
  struct Frame {
    const RdsgNode* node_key;
    uint32_t node;
    std::vector<RdsgEdge> edges;
    size_t next = 0;
    StmtId incoming = 0;
  };

  uint32_t push(RdsgNode node, std::optional<StmtId> incoming) {
    auto [it, inserted] = visited_.emplace(std::move(node), static_cast<uint32_t>(visited_.size()));
    const RdsgNode& key = it->first;
    if (options_.subsume_access) by_state_[key.state].push_back(&key);
    Frame f;
    f.node_key = &key;
    f.node = it->second;
    std::vector<RuntimeFault> faults;
    f.edges = successors(program_, key, &faults, options_.successor);
    for (auto& fault : faults)
      if (std::find(verdict_.faults.begin(), verdict_.faults.end(), fault) == verdict_.faults.end())
        verdict_.faults.push_back(std::move(fault));
    auto en = enabled(program_, key.state);
    if (en.empty()) finals_.insert(key.state);
    if (verdict_.graph) {
      ExploredNode n;
      n.enabled = std::move(en);
      verdict_.graph->nodes.push_back(std::move(n));
    }
    if (incoming) f.incoming = *incoming;
    stack_.push_back(std::move(f));
    max_depth_ = std::max<uint64_t>(max_depth_, stack_.size() - 1);
    return stack_.back().node;
  }

  void link(uint32_t from, StmtId t, uint32_t to) {
    if (!verdict_.graph) return;
    auto& n = verdict_.graph->nodes[from];
    n.ample.push_back(t);
    n.targets.push_back(to);
  }

  bool subsumed(const RdsgNode& node) const {
    auto it = by_state_.find(node.state);
    if (it == by_state_.end()) return false;
    for (const RdsgNode* seen : it->second) {
      bool covered = true;
      for (size_t k = 0; k < node.access.size() && covered; ++k)
        covered = node.access[k].subset_of(seen->access[k]);
      if (covered) return true;
    }
    return false;
  }

  void record_witness(const RdsgEdge& edge) {
    const Detection& d = *edge.detection;
    auto key = std::make_tuple(d.slot, std::min(d.thread, d.other), std::max(d.thread, d.other));
    if (!seen_.insert(key).second) return;

    Witness w;
    for (size_t k = 1; k < stack_.size(); ++k) w.path.push_back(stack_[k].incoming);
    w.path.push_back(edge.statement);
    w.slot = d.slot;
    w.location = program_.layout.describe(d.slot);
    w.thread_a = d.thread;
    w.thread_b = d.other;

    const auto& acc = edge.target.access;
    auto writes = [&](Tid t) {
      const auto& ws = acc[t - 1].writes;
      return std::binary_search(ws.begin(), ws.end(), d.slot);
    };
    bool a_write = writes(d.thread);
    bool b_write = writes(d.other);
    // Prefer the write when a thread both read and wrote the location.
    Trace trace = make_trace(program_, program_.initial_state(), w.path);
    w.access_a = last_access(trace, d.thread, d.slot, a_write);
    w.access_b = last_access(trace, d.other, d.slot, b_write);
    verdict_.witnesses.push_back(std::move(w));
  }

  Access last_access(const Trace& trace, Tid tid, Slot slot, bool write) const {
    for (auto it = trace.events.rbegin(); it != trace.events.rend(); ++it) {
      if (it->tid != tid) continue;
      const auto& set = write ? it->footprint.writes : it->footprint.reads;
      if (!std::binary_search(set.begin(), set.end(), slot)) continue;
      const Statement& st = program_.statement(it->statement);
      return Access{it->statement, tid, write, st.span, st.text};
    }
    throw std::logic_error("witness access not found on counterexample path");
  }

  const ProgramModel& program_;
  const CheckOptions& options_;
  RaceVerdict verdict_;
  std::unordered_map<RdsgNode, uint32_t, RdsgNodeHash> visited_;
  std::unordered_map<GlobalState, std::vector<const RdsgNode*>, GlobalStateHash> by_state_;
  std::vector<Frame> stack_;
  std::set<GlobalState> finals_;
  std::set<std::tuple<Slot, Tid, Tid>> seen_;
  uint64_t max_depth_ = 0;
};

}  // namespace

RaceVerdict check(const ProgramModel& program, const CheckOptions& options) {
  return RdsgExplorer(program, options).run();
}

DensityReport validate_density(const ProgramModel& program, const ExploredGraph& graph) {
  DensityReport report;
  const size_t n = graph.nodes.size();
  std::vector<bool> full(n, false);

  for (uint32_t u = 0; u < n; ++u) {
    const ExploredNode& node = graph.nodes[u];
    std::set<StmtId> en(node.enabled.begin(), node.enabled.end());
    std::set<StmtId> am(node.ample.begin(), node.ample.end());
    full[u] = en == am;
    if (!en.empty() && am.empty())
      report.violations.push_back({u, 1, "enabled statements but no outgoing edge"});
    for (StmtId t : am) {
      for (StmtId t2 : en) {
        if (program.statement(t2).tid == program.statement(t).tid && !am.count(t2)) {
          report.violations.push_back(
              {u, 2, "statement " + std::to_string(t2) + " of thread " + std::to_string(program.statement(t).tid) +
                         " enabled but not scheduled alongside " + std::to_string(t)});
          break;
        }
      }
    }
    // An enabled barrier exit cannot be disabled by another thread and only
    // moves its own thread, so a reduced node may schedule it like nsync.
    if (!full[u])
      for (StmtId t : am)
        if (!program.statement(t).is_nsync() && program.statement(t).kind != Statement::Kind::Exit) {
          report.violations.push_back({u, 3, "reduced node schedules synchronization statement " + std::to_string(t)});
          break;
        }
  }

  // Condition 4: no cycle made only of reduced nodes. Tarjan over the
  // subgraph induced by the reduced nodes.
  constexpr uint32_t kUnvisited = UINT32_MAX;
  std::vector<uint32_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<uint32_t> scc_stack;
  uint32_t counter = 0;
  for (uint32_t root = 0; root < n; ++root) {
    if (full[root] || index[root] != kUnvisited) continue;
    std::vector<std::pair<uint32_t, size_t>> call{{root, 0}};
    index[root] = low[root] = counter++;
    scc_stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [u, i] = call.back();
      const auto& targets = graph.nodes[u].targets;
      if (i < targets.size()) {
        uint32_t v = targets[i++];
        if (full[v]) continue;
        if (index[v] == kUnvisited) {
          index[v] = low[v] = counter++;
          scc_stack.push_back(v);
          on_stack[v] = true;
          call.emplace_back(v, 0);
        } else if (on_stack[v]) {
          low[u] = std::min(low[u], index[v]);
        }
        continue;
      }
      uint32_t done = u;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] != index[done]) continue;
      std::vector<uint32_t> component;
      uint32_t w;
      do {
        w = scc_stack.back();
        scc_stack.pop_back();
        on_stack[w] = false;
        component.push_back(w);
      } while (w != done);
      const auto& self = graph.nodes[done].targets;
      bool cyclic = component.size() > 1 || std::find(self.begin(), self.end(), done) != self.end();
      if (cyclic)
        report.violations.push_back(
            {done, 4, "cycle of " + std::to_string(component.size()) + " node(s) without a fully expanded node"});
    }
  }
  return report;
}

}  // namespace mcrace
