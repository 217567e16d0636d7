#include "mcrace/semantics.hpp"

#include <algorithm>
#include <limits>

namespace mcrace {
namespace {

struct Fault {
  SourceSpan span;
  std::string message;
};

class Evaluator {
 public:
  Evaluator(const ProgramModel& program, const ThreadModel& thread, GlobalState& state, Footprint& footprint)
      : program_(program), thread_(thread), state_(state), footprint_(footprint) {}

  int64_t eval(const Code& c) {
    switch (c.op) {
      case Code::Op::Const: return c.value;
      case Code::Op::Local: return state_.locals[thread_.local_offset + c.ref];
      case Code::Op::Shared: {
        Slot s = program_.layout.vars[c.ref].offset;
        footprint_.add_read(s);
        return state_.shared[s];
      }
      case Code::Op::SharedIndex: {
        Slot s = element(c.ref, eval(c.args[0]), c.span);
        footprint_.add_read(s);
        return state_.shared[s];
      }
      case Code::Op::Neg: return wrap(0, eval(c.args[0]), '-');
      case Code::Op::Not: return eval(c.args[0]) == 0;
      case Code::Op::And: return eval(c.args[0]) != 0 && eval(c.args[1]) != 0;
      case Code::Op::Or: return eval(c.args[0]) != 0 || eval(c.args[1]) != 0;
      default: break;
    }
    int64_t a = eval(c.args[0]);
    int64_t b = eval(c.args[1]);
    switch (c.op) {
      case Code::Op::Add: return wrap(a, b, '+');
      case Code::Op::Sub: return wrap(a, b, '-');
      case Code::Op::Mul: return wrap(a, b, '*');
      case Code::Op::Div:
      case Code::Op::Mod:
        if (b == 0) throw Fault{c.span, "division by zero"};
        if (a == std::numeric_limits<int64_t>::min() && b == -1) throw Fault{c.span, "division overflow"};
        return c.op == Code::Op::Div ? a / b : a % b;
      case Code::Op::Lt: return a < b;
      case Code::Op::Le: return a <= b;
      case Code::Op::Gt: return a > b;
      case Code::Op::Ge: return a >= b;
      case Code::Op::Eq: return a == b;
      case Code::Op::Ne: return a != b;
      default: break;
    }
    throw Fault{c.span, "malformed expression"};
  }

  Slot element(uint32_t var, int64_t index, const SourceSpan& span) const {
    const VarInfo& v = program_.layout.vars[var];
    if (index < 0 || index >= static_cast<int64_t>(v.length))
      throw Fault{span, "index " + std::to_string(index) + " out of bounds for " + v.name + "[" +
                            std::to_string(v.length) + "]"};
    return v.offset + static_cast<Slot>(index);
  }

  void assign(const Target& t, int64_t value) {
    switch (t.kind) {
      case Target::Kind::Local: state_.locals[thread_.local_offset + t.ref] = value; return;
      case Target::Kind::Shared: {
        Slot s = program_.layout.vars[t.ref].offset;
        footprint_.add_write(s);
        state_.shared[s] = value;
        return;
      }
      case Target::Kind::SharedIndex: {
        Slot s = element(t.ref, eval(*t.index), t.index->span);
        footprint_.add_write(s);
        state_.shared[s] = value;
        return;
      }
    }
  }

 private:
  static int64_t wrap(int64_t a, int64_t b, char op) {
    auto ua = static_cast<uint64_t>(a), ub = static_cast<uint64_t>(b);
    switch (op) {
      case '+': return static_cast<int64_t>(ua + ub);
      case '-': return static_cast<int64_t>(ua - ub);
      default: return static_cast<int64_t>(ua * ub);
    }
  }

  const ProgramModel& program_;
  const ThreadModel& thread_;
  GlobalState& state_;
  Footprint& footprint_;
};

}  // namespace

std::vector<StmtId> enabled_for_thread(const ProgramModel& program, const GlobalState& state, Tid tid) {
  const Location& loc = program.location(tid, state.pcs[tid - 1]);
  switch (loc.kind) {
    case LocalKind::Acquire:
      if (state.lock_owner[loc.lock] == kNoThread) return loc.stmts;
      return {};
    case LocalKind::Release:
      if (state.lock_owner[loc.lock] == tid) return loc.stmts;
      return {};
    case LocalKind::Barrier:
      if (!state.waiting(tid)) return loc.stmts;
      return {};
    case LocalKind::Nsync: return loc.stmts;
    case LocalKind::Term: return {};
  }
  return {};
}

std::vector<StmtId> enabled(const ProgramModel& program, const GlobalState& state) {
  std::vector<StmtId> out;
  for (Tid t = 1; t <= program.num_threads(); ++t) {
    auto mine = enabled_for_thread(program, state, t);
    out.insert(out.end(), mine.begin(), mine.end());
  }
  return out;
}

bool is_enabled(const ProgramModel& program, const GlobalState& state, StmtId stmt) {
  if (stmt >= program.statements.size()) return false;
  auto mine = enabled_for_thread(program, state, program.statement(stmt).tid);
  return std::find(mine.begin(), mine.end(), stmt) != mine.end();
}

StepResult execute(const ProgramModel& program, const GlobalState& state, StmtId stmt) {
  const Statement& st = program.statement(stmt);
  const Tid tid = st.tid;
  const ThreadModel& thread = program.thread(tid);
  const Location& loc = thread.locations[state.pcs[tid - 1]];

  StepResult out{state, {}, std::nullopt};
  GlobalState& s = out.state;
  Pc next = loc.next;
  switch (st.kind) {
    case Statement::Kind::Acquire: s.lock_owner[st.lock] = tid; break;
    case Statement::Kind::Release: s.lock_owner[st.lock] = kNoThread; break;
    case Statement::Kind::Exit: break;
    case Statement::Kind::Nsync: {
      Evaluator ev(program, thread, s, out.footprint);
      try {
        const Effect& e = st.effect;
        switch (e.kind) {
          case Effect::Kind::Nop: next = e.next; break;
          case Effect::Kind::Assign: {
            int64_t v = ev.eval(e.value);
            ev.assign(e.target, v);
            next = e.next;
            break;
          }
          case Effect::Kind::Branch: next = ev.eval(e.value) != 0 ? e.next : e.else_next; break;
        }
      } catch (const Fault& f) {
        // The thread stops; reads made before the fault stay in the footprint.
        out.state = state;
        out.state.pcs[tid - 1] = thread.fault_pc;
        out.fault = RuntimeFault{tid, stmt, f.span, f.message};
        return out;
      }
      break;
    }
  }
  s.pcs[tid - 1] = next;
  if (thread.locations[next].kind == LocalKind::Barrier) {
    s.wait_set |= uint64_t{1} << (tid - 1);
    if (s.wait_set == program.all_threads_mask()) s.wait_set = 0;
  }
  return out;
}

}  // namespace mcrace
