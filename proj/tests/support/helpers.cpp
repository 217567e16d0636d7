#include "helpers.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mcrace/semantics.hpp"

#ifndef MCRACE_SOURCE_DIR
#define MCRACE_SOURCE_DIR "."
#endif

namespace mcrace::testing {

namespace {

bool stmts_contain_sugar(const std::vector<Stmt>& body) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Atomic || s.kind == Stmt::Kind::Critical) return true;
    if (stmts_contain_sugar(s.body) || stmts_contain_sugar(s.else_body)) return true;
  }
  return false;
}

}  // namespace

bool contains_sugar(const Ast& ast) {
  for (const auto& t : ast.threads)
    if (stmts_contain_sugar(t.body)) return true;
  return false;
}

std::vector<LocalKind> reachable_kinds(const ThreadModel& t) {
  std::vector<LocalKind> out;
  std::vector<bool> seen(t.locations.size(), false);
  std::vector<Pc> stack{t.initial};
  while (!stack.empty()) {
    Pc p = stack.back();
    stack.pop_back();
    if (seen[p]) continue;
    seen[p] = true;
    out.push_back(t.locations[p].kind);
    const auto& e = t.locations[p].edges;
    for (auto it = e.rbegin(); it != e.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<Pc> find_cycle(const ThreadModel& t, bool skip_r) {
  const size_t n = t.locations.size();
  std::vector<uint8_t> color(n, 0);
  std::vector<Pc> path;
  std::function<bool(Pc)> dfs = [&](Pc p) {
    color[p] = 1;
    path.push_back(p);
    for (Pc q : t.locations[p].edges) {
      if (skip_r && t.in_r(q)) continue;
      if (color[q] == 1) {
        auto it = std::find(path.begin(), path.end(), q);
        path.erase(path.begin(), it);
        return true;
      }
      if (color[q] == 0 && dfs(q)) return true;
    }
    color[p] = 2;
    path.pop_back();
    return false;
  };
  for (Pc p = 0; p < n; ++p) {
    if (skip_r && t.in_r(p)) continue;
    if (color[p] == 0 && dfs(p)) return path;
  }
  return {};
}

std::string fingerprint(const ProgramModel& m) {
  std::ostringstream os;
  os << m.name << '|' << m.layout.size << '|' << m.total_locals << '\n';
  for (const auto& l : m.locks) os << "lock " << l << '\n';
  for (int64_t v : m.initial_shared) os << v << ' ';
  os << '\n';
  for (const auto& t : m.threads) {
    os << "thread " << t.tid << " init " << t.initial << " fault " << t.fault_pc << '\n';
    for (Pc p = 0; p < t.locations.size(); ++p) {
      const Location& loc = t.locations[p];
      os << p << ' ' << to_string(loc.kind) << " next " << loc.next << " lock " << loc.lock << " r " << t.in_r(p)
         << " y " << loc.yield << " stmts";
      for (StmtId s : loc.stmts) os << ' ' << s;
      os << " edges";
      for (Pc e : loc.edges) os << ' ' << e;
      os << ' ' << loc.span.str() << '\n';
    }
  }
  for (const auto& s : m.statements)
    os << s.id << ' ' << s.tid << ' ' << int(s.kind) << ' ' << s.lock << ' ' << int(s.effect.kind) << ' '
       << s.effect.next << ' ' << s.effect.else_next << ' ' << s.span.str() << ' ' << s.text << '\n';
  return os.str();
}

BruteForce brute_force(const ProgramModel& m, uint64_t max_executions, size_t max_length) {
  BruteForce out;
  std::vector<StmtId> path;
  std::function<void(const GlobalState&)> go = [&](const GlobalState& s) {
    if (out.truncated) return;
    auto en = enabled(m, s);
    if (en.empty() || path.size() >= max_length) {
      if (!en.empty()) out.truncated = true;
      if (++out.executions > max_executions) {
        out.truncated = true;
        return;
      }
      Trace tr = make_trace(m, m.initial_state(), path);
      if (!has_race(m, tr).empty()) out.racy = true;
      if (en.empty()) out.finals.insert(s);
      return;
    }
    for (StmtId t : en) {
      StepResult r = execute(m, s, t);
      path.push_back(t);
      go(r.state);
      path.pop_back();
    }
  };
  go(m.initial_state());
  return out;
}

std::vector<StmtId> random_execution(const ProgramModel& m, std::mt19937_64& rng, size_t max_length) {
  std::vector<StmtId> path;
  GlobalState s = m.initial_state();
  while (path.size() < max_length) {
    auto en = enabled(m, s);
    if (en.empty()) break;
    StmtId t = en[std::uniform_int_distribution<size_t>(0, en.size() - 1)(rng)];
    s = execute(m, s, t).state;
    path.push_back(t);
  }
  return path;
}

std::vector<GlobalState> sample_states(const ProgramModel& m, std::mt19937_64& rng, size_t count) {
  std::vector<GlobalState> out;
  while (out.size() < count) {
    auto path = random_execution(m, rng);
    Trace tr = make_trace(m, m.initial_state(), path);
    out.push_back(tr.initial);
    for (const auto& s : tr.post_states) {
      if (out.size() >= count) break;
      out.push_back(s);
    }
  }
  return out;
}

std::string corpus_dir() { return std::string(MCRACE_SOURCE_DIR) + "/corpus"; }
std::string programs_dir() { return std::string(MCRACE_SOURCE_DIR) + "/programs"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mcrace::testing
