#include "mcrace/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace mcrace {

Trace make_trace(const ProgramModel& program, const GlobalState& initial, const std::vector<StmtId>& statements) {
  Trace trace;
  trace.initial = initial;
  std::vector<uint32_t> seq(program.num_threads(), 0);
  GlobalState current = initial;
  for (StmtId id : statements) {
    if (!is_enabled(program, current, id))
      throw std::invalid_argument("statement " + std::to_string(id) + " is not enabled");
    StepResult r = execute(program, current, id);
    const Statement& st = program.statement(id);
    Event e;
    e.statement = id;
    e.tid = st.tid;
    e.seq = ++seq[st.tid - 1];
    e.index = trace.events.size();
    e.kind = st.kind;
    e.lock = st.lock;
    e.footprint = std::move(r.footprint);
    trace.events.push_back(std::move(e));
    current = std::move(r.state);
    trace.post_states.push_back(current);
  }
  return trace;
}

HbRelation::HbRelation(size_t n)
    : n_(n), po_(n * n, false), ra_(n * n, false), bar_(n * n, false), closure_(n * n, false) {}

std::vector<uint32_t> epochs(const Trace& trace) {
  std::map<Tid, uint32_t> exits;
  std::vector<uint32_t> out;
  out.reserve(trace.events.size());
  for (const auto& e : trace.events) {
    if (e.kind == Statement::Kind::Exit) ++exits[e.tid];
    out.push_back(exits[e.tid]);
  }
  return out;
}

HbRelation happens_before(const ProgramModel&, const Trace& trace) {
  const auto& ev = trace.events;
  const size_t n = ev.size();
  HbRelation hb(n);
  auto at = [n](size_t a, size_t b) { return a * n + b; };

  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b)
      if (ev[a].tid == ev[b].tid && ev[a].seq < ev[b].seq) hb.po_[at(a, b)] = true;

  // Each acquire pairs with the releases on its lock back to the previous
  // acquire on that lock.
  for (size_t j = 0; j < n; ++j) {
    if (ev[j].kind != Statement::Kind::Acquire) continue;
    for (size_t i = j; i-- > 0;) {
      if (ev[i].lock != ev[j].lock) continue;
      if (ev[i].kind == Statement::Kind::Acquire) break;
      if (ev[i].kind == Statement::Kind::Release) hb.ra_[at(i, j)] = true;
    }
  }

  auto ep = epochs(trace);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b)
      if (ep[a] < ep[b]) hb.bar_[at(a, b)] = true;

  for (size_t k = 0; k < n * n; ++k) hb.closure_[k] = hb.po_[k] || hb.ra_[k] || hb.bar_[k];
  for (size_t k = 0; k < n; ++k)
    for (size_t a = 0; a < n; ++a) {
      if (!hb.closure_[at(a, k)]) continue;
      for (size_t b = 0; b < n; ++b)
        if (hb.closure_[at(k, b)]) hb.closure_[at(a, b)] = true;
    }
  return hb;
}

std::optional<Slot> conflicts(const Event& a, const Event& b) {
  if (a.kind != Statement::Kind::Nsync || b.kind != Statement::Kind::Nsync || a.tid == b.tid) return std::nullopt;
  return a.footprint.conflict_with(b.footprint);
}

std::vector<RacePair> has_race(const ProgramModel& program, const Trace& trace) {
  HbRelation hb = happens_before(program, trace);
  std::vector<RacePair> out;
  const auto& ev = trace.events;
  for (size_t a = 0; a < ev.size(); ++a)
    for (size_t b = a + 1; b < ev.size(); ++b)
      if (auto slot = conflicts(ev[a], ev[b]); slot && !hb.ordered(a, b) && !hb.ordered(b, a))
        out.push_back({a, b, *slot});
  return out;
}

namespace {

using Clock = std::vector<uint32_t>;

void join(Clock& into, const Clock& from) {
  for (size_t i = 0; i < into.size(); ++i) into[i] = std::max(into[i], from[i]);
}

}  // namespace

std::vector<RacePair> has_race_incremental(const ProgramModel& program, const Trace& trace) {
  const uint32_t n = program.num_threads();
  std::vector<Clock> thread_clock(n, Clock(n, 0));
  std::vector<Clock> lock_clock(program.locks.size(), Clock(n, 0));
  std::vector<Clock> epoch_join;  // epoch_join[m]: join of all events with epoch m
  std::vector<uint32_t> epoch(n, 0);
  std::vector<Clock> event_clock;
  const auto& ev = trace.events;
  event_clock.reserve(ev.size());

  for (const auto& e : ev) {
    Clock& c = thread_clock[e.tid - 1];
    c[e.tid - 1] = e.seq;
    switch (e.kind) {
      case Statement::Kind::Acquire: join(c, lock_clock[e.lock]); break;
      case Statement::Kind::Release: lock_clock[e.lock] = c; break;
      case Statement::Kind::Exit: {
        uint32_t m = epoch[e.tid - 1]++;
        for (uint32_t k = 0; k <= m && k < epoch_join.size(); ++k) join(c, epoch_join[k]);
        break;
      }
      case Statement::Kind::Nsync: break;
    }
    uint32_t m = epoch[e.tid - 1];
    if (epoch_join.size() <= m) epoch_join.resize(m + 1, Clock(n, 0));
    join(epoch_join[m], c);
    event_clock.push_back(c);
  }

  std::vector<RacePair> out;
  for (size_t b = 0; b < ev.size(); ++b)
    for (size_t a = 0; a < b; ++a)
      if (auto slot = conflicts(ev[a], ev[b]); slot && event_clock[b][ev[a].tid - 1] < ev[a].seq)
        out.push_back({a, b, *slot});
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

Footprint intersect(const Footprint& a, const Footprint& b) {
  Footprint out;
  std::set_intersection(a.reads.begin(), a.reads.end(), b.reads.begin(), b.reads.end(),
                        std::back_inserter(out.reads));
  std::set_intersection(a.writes.begin(), a.writes.end(), b.writes.begin(), b.writes.end(),
                        std::back_inserter(out.writes));
  return out;
}

}  // namespace

HbFrontier::HbFrontier(const ProgramModel& program)
    : threads_(program.num_threads()),
      observers_(program.num_threads() + static_cast<uint32_t>(program.locks.size())),
      pending_(static_cast<size_t>(threads_) * observers_),
      since_exit_(threads_),
      epoch_(threads_, 0) {}

std::optional<HbFrontier::Race> HbFrontier::step(const Statement& stmt, const Footprint& footprint) {
  const Tid i = stmt.tid;
  std::optional<Race> race;
  switch (stmt.kind) {
    case Statement::Kind::Nsync:
      for (Tid k = 1; k <= threads_ && !race; ++k) {
        if (k == i) continue;
        if (auto s = footprint.conflict_with(pending(k, i - 1))) race = Race{k, *s};
      }
      if (!footprint.empty()) {
        for (uint32_t x = 0; x < observers_; ++x)
          if (x != i - 1) pending(i, x).merge(footprint);
        since_exit_[i - 1].merge(footprint);
      }
      break;
    case Statement::Kind::Release:
      for (Tid k = 1; k <= threads_; ++k) {
        Footprint& slot = pending(k, threads_ + stmt.lock);
        if (k == i)
          slot.clear();
        else
          slot = pending(k, i - 1);
      }
      break;
    case Statement::Kind::Acquire:
      for (Tid k = 1; k <= threads_; ++k) {
        if (k == i) continue;
        Footprint& mine = pending(k, i - 1);
        mine = intersect(mine, pending(k, threads_ + stmt.lock));
      }
      break;
    case Statement::Kind::Exit: {
      uint8_t e = ++epoch_[i - 1];
      for (Tid k = 1; k <= threads_; ++k) {
        if (k == i) continue;
        Footprint& mine = pending(k, i - 1);
        if (epoch_[k - 1] == e)
          mine = intersect(mine, since_exit_[k - 1]);
        else
          mine.clear();
      }
      since_exit_[i - 1].clear();
      if (std::all_of(epoch_.begin(), epoch_.end(), [](uint8_t v) { return v > 0; }))
        for (auto& v : epoch_) --v;
      break;
    }
  }
  return race;
}

uint64_t HbFrontier::hash() const {
  uint64_t h = 0x9e3779b97f4a7c15ull;
  auto mix = [&h](uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  auto fp = [&](const Footprint& f) {
    mix(f.reads.size());
    for (Slot s : f.reads) mix(s);
    mix(f.writes.size() | (uint64_t{1} << 40));
    for (Slot s : f.writes) mix(s);
  };
  for (const auto& f : pending_) fp(f);
  for (const auto& f : since_exit_) fp(f);
  for (uint8_t v : epoch_) mix(v);
  return h;
}

namespace {

struct OracleKey {
  GlobalState state;
  HbFrontier frontier;
  bool operator==(const OracleKey&) const = default;
};

struct OracleKeyHash {
  size_t operator()(const OracleKey& k) const {
    return static_cast<size_t>(canonical_hash(k.state) ^ (k.frontier.hash() * 0x100000001b3ull));
  }
};

class FullExplorer {
 public:
  FullExplorer(const ProgramModel& program, const ExploreOptions& options) : program_(program), options_(options) {}

  RaceVerdict run() {
    auto start = std::chrono::steady_clock::now();
    RaceVerdict verdict;
    if (options_.record_graph) verdict.graph.emplace();

    OracleKey root{program_.initial_state(), HbFrontier(program_)};
    push(root, verdict);
    bool stop = false;
    while (!stack_.empty() && !stop) {
      Frame& top = stack_.back();
      if (top.next == top.enabled.size()) {
        stack_.pop_back();
        continue;
      }
      StmtId t = top.enabled[top.next++];
      const OracleKey& here = *top.key;
      uint32_t from = top.node;
      StepResult r = execute(program_, here.state, t);
      if (r.fault) add_fault(verdict, *r.fault);
      ++verdict.stats.edges;
      OracleKey succ{std::move(r.state), here.frontier};
      auto race = succ.frontier.step(program_.statement(t), r.footprint);
      if (race) {
        record_witness(verdict, t);
        if (options_.policy == WitnessPolicy::First) {
          stop = true;
          break;
        }
      }
      auto found = visited_.find(succ);
      if (found != visited_.end()) {
        link(verdict, from, t, found->second);
        continue;
      }
      if (visited_.size() >= options_.limits.max_states) {
        verdict.incomplete = "max_states";
        break;
      }
      if (stack_.size() > options_.limits.max_depth) {
        verdict.incomplete = "max_depth";
        break;
      }
      if (options_.limits.time_limit_seconds > 0 && (visited_.size() & 0x3fff) == 0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >
              options_.limits.time_limit_seconds) {
        verdict.incomplete = "time_limit";
        break;
      }
      uint32_t to = push(std::move(succ), verdict, t);
      link(verdict, from, t, to);
    }

    verdict.stats.nodes = visited_.size();
    verdict.stats.max_depth_reached = max_depth_;
    verdict.final_states.assign(finals_.begin(), finals_.end());
    if (!verdict.witnesses.empty())
      verdict.verdict = Verdict::Racy;
    else if (!verdict.incomplete.empty())
      verdict.verdict = Verdict::Unknown;
    else
      verdict.verdict = Verdict::RaceFree;
    verdict.stats.millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return verdict;
  }

 private:
  struct Frame {
    const OracleKey* key;
    uint32_t node;
    std::vector<StmtId> enabled;
    size_t next = 0;
    StmtId incoming = 0;
  };

  uint32_t push(OracleKey key, RaceVerdict& verdict, std::optional<StmtId> incoming = std::nullopt) {
    auto [it, inserted] = visited_.emplace(std::move(key), static_cast<uint32_t>(visited_.size()));
    Frame f;
    f.key = &it->first;
    f.node = it->second;
    f.enabled = enabled(program_, it->first.state);
    if (f.enabled.empty()) finals_.insert(it->first.state);
    if (incoming) f.incoming = *incoming;
    if (verdict.graph) {
      ExploredNode n;
      n.enabled = f.enabled;
      verdict.graph->nodes.push_back(std::move(n));
    }
    stack_.push_back(std::move(f));
    max_depth_ = std::max<uint64_t>(max_depth_, stack_.size() - 1);
    return stack_.back().node;
  }

  void link(RaceVerdict& verdict, uint32_t from, StmtId t, uint32_t to) {
    if (!verdict.graph) return;
    auto& n = verdict.graph->nodes[from];
    n.ample.push_back(t);
    n.targets.push_back(to);
  }

  void add_fault(RaceVerdict& verdict, const RuntimeFault& f) {
    if (std::find(verdict.faults.begin(), verdict.faults.end(), f) == verdict.faults.end())
      verdict.faults.push_back(f);
  }

  // Rebuilds the current path as a trace and takes the earliest racing
  // partner of the final event. thread_a is the one executing it.
  void record_witness(RaceVerdict& verdict, StmtId last) {
    std::vector<StmtId> path;
    for (size_t k = 1; k < stack_.size(); ++k) path.push_back(stack_[k].incoming);
    path.push_back(last);
    Trace trace = make_trace(program_, program_.initial_state(), path);
    auto races = has_race_incremental(program_, trace);
    const size_t end = trace.events.size() - 1;
    for (const auto& rp : races) {
      if (rp.second != end) continue;
      const Event& a = trace.events[rp.second];
      const Event& b = trace.events[rp.first];
      auto key = std::make_tuple(rp.slot, std::min(a.tid, b.tid), std::max(a.tid, b.tid));
      if (!seen_.insert(key).second) return;
      Witness w;
      w.slot = rp.slot;
      w.location = program_.layout.describe(rp.slot);
      w.thread_a = a.tid;
      w.thread_b = b.tid;
      w.access_a = access(a, rp.slot);
      w.access_b = access(b, rp.slot);
      w.path = std::move(path);
      verdict.witnesses.push_back(std::move(w));
      return;
    }
    throw std::logic_error("oracle frontier reported a race the trace does not contain");
  }

  Access access(const Event& e, Slot slot) const {
    const Statement& st = program_.statement(e.statement);
    Access a;
    a.statement = e.statement;
    a.tid = e.tid;
    a.write = std::binary_search(e.footprint.writes.begin(), e.footprint.writes.end(), slot);
    a.span = st.span;
    a.text = st.text;
    return a;
  }

  const ProgramModel& program_;
  const ExploreOptions& options_;
  std::unordered_map<OracleKey, uint32_t, OracleKeyHash> visited_;
  std::vector<Frame> stack_;
  std::set<GlobalState> finals_;
  std::set<std::tuple<Slot, Tid, Tid>> seen_;
  uint64_t max_depth_ = 0;
};

}  // namespace

RaceVerdict explore_full(const ProgramModel& program, const ExploreOptions& options) {
  return FullExplorer(program, options).run();
}

}  // namespace mcrace
