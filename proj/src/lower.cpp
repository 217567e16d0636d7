#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>

#include "mcrace/frontend.hpp"

namespace mcrace {
namespace {

constexpr size_t kMaxLocationsPerThread = 1u << 20;

bool has_sugar(const std::vector<Stmt>& body) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::Atomic || s.kind == Stmt::Kind::Critical) return true;
    if (has_sugar(s.body) || has_sugar(s.else_body)) return true;
  }
  return false;
}

using Env = std::map<std::string, int64_t>;

int64_t eval_const(const Expr& e, const Env& env) {
  switch (e.kind) {
    case Expr::Kind::IntLit: return e.value;
    case Expr::Kind::Var: {
      auto it = env.find(e.name);
      if (it == env.end()) throw LoweringError({e.span}, "'" + e.name + "' is not a constant");
      return it->second;
    }
    case Expr::Kind::Index: throw LoweringError({e.span}, "array access in constant expression");
    case Expr::Kind::Unary: {
      int64_t x = eval_const(e.operands[0], env);
      if (e.unary == UnaryOp::Not) return x == 0;
      return static_cast<int64_t>(0 - static_cast<uint64_t>(x));
    }
    case Expr::Kind::Binary: {
      int64_t a = eval_const(e.operands[0], env);
      int64_t b = eval_const(e.operands[1], env);
      auto ua = static_cast<uint64_t>(a), ub = static_cast<uint64_t>(b);
      switch (e.binary) {
        case BinaryOp::Add: return static_cast<int64_t>(ua + ub);
        case BinaryOp::Sub: return static_cast<int64_t>(ua - ub);
        case BinaryOp::Mul: return static_cast<int64_t>(ua * ub);
        case BinaryOp::Div:
        case BinaryOp::Mod:
          if (b == 0 || (a == std::numeric_limits<int64_t>::min() && b == -1))
            throw LoweringError({e.span}, "division fault in constant expression");
          return e.binary == BinaryOp::Div ? a / b : a % b;
        case BinaryOp::Lt: return a < b;
        case BinaryOp::Le: return a <= b;
        case BinaryOp::Gt: return a > b;
        case BinaryOp::Ge: return a >= b;
        case BinaryOp::Eq: return a == b;
        case BinaryOp::Ne: return a != b;
        case BinaryOp::And: return a != 0 && b != 0;
        case BinaryOp::Or: return a != 0 || b != 0;
      }
    }
  }
  return 0;
}

Code::Op code_op(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return Code::Op::Add;
    case BinaryOp::Sub: return Code::Op::Sub;
    case BinaryOp::Mul: return Code::Op::Mul;
    case BinaryOp::Div: return Code::Op::Div;
    case BinaryOp::Mod: return Code::Op::Mod;
    case BinaryOp::Lt: return Code::Op::Lt;
    case BinaryOp::Le: return Code::Op::Le;
    case BinaryOp::Gt: return Code::Op::Gt;
    case BinaryOp::Ge: return Code::Op::Ge;
    case BinaryOp::Eq: return Code::Op::Eq;
    case BinaryOp::Ne: return Code::Op::Ne;
    case BinaryOp::And: return Code::Op::And;
    case BinaryOp::Or: return Code::Op::Or;
  }
  return Code::Op::Add;
}

void collect_locals(const std::vector<Stmt>& body, std::vector<std::string>& out) {
  for (const auto& s : body) {
    if (s.kind == Stmt::Kind::LocalDecl) out.push_back(s.name);
    collect_locals(s.body, out);
    collect_locals(s.else_body, out);
  }
}

class ThreadLowering {
 public:
  ThreadLowering(const ProgramModel& model, const Env& inputs, const ThreadDecl& decl)
      : model_(model), env_(inputs), decl_(decl) {
    collect_locals(decl.body, local_names_);
    for (uint32_t i = 0; i < local_names_.size(); ++i) locals_[local_names_[i]] = i;
  }

  // Fills `thread` and appends its statements to `table`.
  void run(ThreadModel& thread, std::vector<Statement>& table) {
    Location term;
    term.kind = LocalKind::Term;
    term.span = decl_.span;
    Pc term_pc = emit(std::move(term));
    Pc entry = lower_block(decl_.body, term_pc);
    finish(entry, thread, table);
  }

 private:
  Pc emit(Location loc) {
    if (locs_.size() >= kMaxLocationsPerThread)
      throw LoweringError({decl_.span}, "thread " + std::to_string(decl_.tid) + " is too large after unrolling");
    locs_.push_back(std::move(loc));
    return static_cast<Pc>(locs_.size() - 1);
  }

  StmtId add_stmt(Statement s) {
    s.tid = decl_.tid;
    s.id = static_cast<StmtId>(stmts_.size());
    stmts_.push_back(std::move(s));
    return stmts_.back().id;
  }

  std::string bindings_suffix() const {
    std::ostringstream os;
    bool any = false;
    for (const auto& name : loop_vars_) {
      os << (any ? ", " : " {") << name << '=' << env_.at(name);
      any = true;
    }
    if (any) os << '}';
    return os.str();
  }

  Code compile(const Expr& e) {
    Code c;
    c.span = e.span;
    switch (e.kind) {
      case Expr::Kind::IntLit:
        c.op = Code::Op::Const;
        c.value = e.value;
        return c;
      case Expr::Kind::Var: {
        if (auto it = env_.find(e.name); it != env_.end()) {
          c.op = Code::Op::Const;
          c.value = it->second;
        } else if (auto l = locals_.find(e.name); l != locals_.end()) {
          c.op = Code::Op::Local;
          c.ref = l->second;
        } else if (auto v = model_.layout.find(e.name)) {
          c.op = Code::Op::Shared;
          c.ref = *v;
        } else {
          throw LoweringError({e.span}, "unknown identifier '" + e.name + "'");
        }
        return c;
      }
      case Expr::Kind::Index: {
        auto v = model_.layout.find(e.name);
        if (!v || !model_.layout.vars[*v].is_array) throw LoweringError({e.span}, "'" + e.name + "' is not an array");
        c.op = Code::Op::SharedIndex;
        c.ref = *v;
        c.args.push_back(compile(e.operands[0]));
        return c;
      }
      case Expr::Kind::Unary:
        c.op = e.unary == UnaryOp::Neg ? Code::Op::Neg : Code::Op::Not;
        c.args.push_back(compile(e.operands[0]));
        return c;
      case Expr::Kind::Binary:
        c.op = code_op(e.binary);
        c.args.push_back(compile(e.operands[0]));
        c.args.push_back(compile(e.operands[1]));
        return c;
    }
    return c;
  }

  Target compile_target(const Stmt& s) {
    Target t;
    if (auto l = locals_.find(s.name); l != locals_.end()) {
      t.kind = Target::Kind::Local;
      t.ref = l->second;
      return t;
    }
    auto v = model_.layout.find(s.name);
    if (!v) throw LoweringError({s.span}, "cannot assign to '" + s.name + "'");
    t.ref = *v;
    if (model_.layout.vars[*v].is_array) {
      if (!s.index) throw LoweringError({s.span}, "array '" + s.name + "' must be indexed");
      t.kind = Target::Kind::SharedIndex;
      t.index = compile(*s.index);
    } else {
      t.kind = Target::Kind::Shared;
    }
    return t;
  }

  std::string target_text(const Stmt& s) const {
    std::string out = s.name;
    if (s.index) out += "[" + pretty_print(*s.index) + "]";
    return out;
  }

  LockId lock_id(const Stmt& s) const {
    auto it = std::find(model_.locks.begin(), model_.locks.end(), s.name);
    if (it == model_.locks.end()) throw LoweringError({s.span}, "undeclared lock '" + s.name + "'");
    return static_cast<LockId>(it - model_.locks.begin());
  }

  Pc nsync(std::vector<StmtId> stmts, const SourceSpan& span, bool yield = false) {
    Location loc;
    loc.kind = LocalKind::Nsync;
    loc.stmts = std::move(stmts);
    loc.yield = yield;
    loc.span = span;
    return emit(std::move(loc));
  }

  Pc nop(const SourceSpan& span, Pc next, std::string text, bool yield = false) {
    Statement st;
    st.kind = Statement::Kind::Nsync;
    st.effect.kind = Effect::Kind::Nop;
    st.effect.next = next;
    st.span = span;
    st.text = std::move(text);
    return nsync({add_stmt(std::move(st))}, span, yield);
  }

  Pc lower_block(const std::vector<Stmt>& body, Pc cont) {
    for (auto it = body.rbegin(); it != body.rend(); ++it) cont = lower_stmt(*it, cont);
    return cont;
  }

  Pc lower_stmt(const Stmt& s, Pc cont) {
    switch (s.kind) {
      case Stmt::Kind::LocalDecl:
        if (!s.value) return cont;
        [[fallthrough]];
      case Stmt::Kind::Assign: {
        Statement st;
        st.kind = Statement::Kind::Nsync;
        st.effect.kind = Effect::Kind::Assign;
        st.effect.target = compile_target(s);
        st.effect.value = compile(*s.value);
        st.effect.next = cont;
        st.span = s.span;
        st.text = target_text(s) + " = " + pretty_print(*s.value) + bindings_suffix();
        return nsync({add_stmt(std::move(st))}, s.span);
      }
      case Stmt::Kind::Acquire:
      case Stmt::Kind::Release: {
        bool acq = s.kind == Stmt::Kind::Acquire;
        Statement st;
        st.kind = acq ? Statement::Kind::Acquire : Statement::Kind::Release;
        st.lock = lock_id(s);
        st.span = s.span;
        st.text = std::string(acq ? "acquire(" : "release(") + s.name + ")";
        Location loc;
        loc.kind = acq ? LocalKind::Acquire : LocalKind::Release;
        loc.lock = st.lock;
        loc.next = cont;
        loc.span = s.span;
        loc.stmts = {add_stmt(std::move(st))};
        return emit(std::move(loc));
      }
      case Stmt::Kind::Barrier: {
        Statement st;
        st.kind = Statement::Kind::Exit;
        st.span = s.span;
        st.text = "barrier exit";
        Location loc;
        loc.kind = LocalKind::Barrier;
        loc.next = cont;
        loc.span = s.span;
        loc.stmts = {add_stmt(std::move(st))};
        Pc wait = emit(std::move(loc));
        return nop(s.span, wait, "barrier arrive");
      }
      case Stmt::Kind::Yield: return nop(s.span, cont, "yield", true);
      case Stmt::Kind::If: {
        Pc then_pc = lower_block(s.body, cont);
        Pc else_pc = s.has_else ? lower_block(s.else_body, cont) : cont;
        return branch(s, then_pc, else_pc, "if (" + pretty_print(*s.value) + ")");
      }
      case Stmt::Kind::While: {
        Pc head = nsync({}, s.span);
        Pc body = lower_block(s.body, head);
        Statement st = branch_stmt(s, body, cont, "while (" + pretty_print(*s.value) + ")");
        locs_[head].stmts = {add_stmt(std::move(st))};
        return head;
      }
      case Stmt::Kind::For: {
        int64_t lo = eval_const(*s.lo, env_);
        int64_t hi = eval_const(*s.hi, env_);
        if (hi > lo && static_cast<uint64_t>(hi - lo) > kMaxLocationsPerThread)
          throw LoweringError({s.span}, "for loop bound too large to unroll");
        loop_vars_.push_back(s.name);
        for (int64_t v = hi - 1; v >= lo; --v) {
          env_[s.name] = v;
          cont = lower_block(s.body, cont);
        }
        env_.erase(s.name);
        loop_vars_.pop_back();
        return cont;
      }
      case Stmt::Kind::Choose: {
        int64_t lo = eval_const(*s.lo, env_);
        int64_t hi = eval_const(*s.hi, env_);
        if (lo > hi) throw LoweringError({s.span}, "empty choose range");
        if (static_cast<uint64_t>(hi - lo) >= kMaxLocationsPerThread)
          throw LoweringError({s.span}, "choose range too large");
        Target target = compile_target(s);
        std::vector<StmtId> ids;
        for (int64_t v = lo; v <= hi; ++v) {
          Statement st;
          st.kind = Statement::Kind::Nsync;
          st.effect.kind = Effect::Kind::Assign;
          st.effect.target = target;
          st.effect.value.op = Code::Op::Const;
          st.effect.value.value = v;
          st.effect.next = cont;
          st.span = s.span;
          st.text = target_text(s) + " = " + std::to_string(v) + " (choose)" + bindings_suffix();
          ids.push_back(add_stmt(std::move(st)));
        }
        return nsync(std::move(ids), s.span);
      }
      case Stmt::Kind::Atomic:
      case Stmt::Kind::Critical:
        throw LoweringError({s.span}, "atomic/critical block survived desugaring");
    }
    return cont;
  }

  Statement branch_stmt(const Stmt& s, Pc then_pc, Pc else_pc, std::string text) {
    Statement st;
    st.kind = Statement::Kind::Nsync;
    st.effect.kind = Effect::Kind::Branch;
    st.effect.value = compile(*s.value);
    st.effect.next = then_pc;
    st.effect.else_next = else_pc;
    st.span = s.span;
    st.text = std::move(text) + bindings_suffix();
    return st;
  }

  Pc branch(const Stmt& s, Pc then_pc, Pc else_pc, std::string text) {
    return nsync({add_stmt(branch_stmt(s, then_pc, else_pc, std::move(text)))}, s.span);
  }

  std::vector<Pc> raw_edges(const Location& loc) const {
    std::vector<Pc> out;
    auto add = [&](Pc p) {
      if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
    };
    switch (loc.kind) {
      case LocalKind::Acquire:
      case LocalKind::Release:
      case LocalKind::Barrier: add(loc.next); break;
      case LocalKind::Nsync:
        for (StmtId id : loc.stmts) {
          const Effect& e = stmts_[id].effect;
          add(e.next);
          if (e.kind == Effect::Kind::Branch) add(e.else_next);
        }
        break;
      case LocalKind::Term: break;
    }
    return out;
  }

  // Renumbers reachable locations in DFS preorder from the entry and
  // statements in location order, then publishes them.
  void finish(Pc entry, ThreadModel& thread, std::vector<Statement>& table) {
    constexpr Pc kUnset = std::numeric_limits<Pc>::max();
    std::vector<Pc> remap(locs_.size(), kUnset);
    std::vector<Pc> order;
    std::vector<Pc> stack{entry};
    while (!stack.empty()) {
      Pc p = stack.back();
      stack.pop_back();
      if (remap[p] != kUnset) continue;
      remap[p] = static_cast<Pc>(order.size());
      order.push_back(p);
      auto succ = raw_edges(locs_[p]);
      for (auto it = succ.rbegin(); it != succ.rend(); ++it)
        if (remap[*it] == kUnset) stack.push_back(*it);
    }

    thread.tid = decl_.tid;
    thread.initial = 0;
    thread.local_names = local_names_;
    thread.locations.clear();
    for (Pc old : order) {
      Location loc = locs_[old];
      loc.edges = raw_edges(locs_[old]);
      for (Pc& e : loc.edges) e = remap[e];
      if (loc.kind != LocalKind::Nsync && loc.kind != LocalKind::Term) loc.next = remap[loc.next];
      for (StmtId& id : loc.stmts) {
        Statement st = stmts_[id];
        if (st.kind == Statement::Kind::Nsync) {
          st.effect.next = remap[st.effect.next];
          if (st.effect.kind == Effect::Kind::Branch) st.effect.else_next = remap[st.effect.else_next];
        }
        st.id = static_cast<StmtId>(table.size());
        id = st.id;
        table.push_back(std::move(st));
      }
      thread.locations.push_back(std::move(loc));
    }
    // A faulting statement ends its thread here. Not part of the local graph.
    Location fault;
    fault.kind = LocalKind::Term;
    fault.span = decl_.span;
    thread.fault_pc = static_cast<Pc>(thread.locations.size());
    thread.locations.push_back(std::move(fault));
  }

  const ProgramModel& model_;
  Env env_;
  const ThreadDecl& decl_;
  std::vector<std::string> local_names_;
  std::map<std::string, uint32_t> locals_;
  std::vector<std::string> loop_vars_;
  std::vector<Location> locs_;
  std::vector<Statement> stmts_;
};

}  // namespace

std::vector<bool> compute_yield_points(const ThreadModel& thread) {
  const size_t n = thread.locations.size();
  std::vector<bool> r(n, false);
  for (size_t p = 0; p < n; ++p) {
    const Location& loc = thread.locations[p];
    r[p] = loc.kind == LocalKind::Acquire || loc.kind == LocalKind::Release || loc.yield;
  }

  // Every cycle meets R iff the graph with R removed is acyclic.
  enum : uint8_t { White, Grey, Black };
  std::vector<uint8_t> color(n, White);
  std::vector<Pc> parent(n, 0);
  for (Pc root = 0; root < n; ++root) {
    if (r[root] || color[root] != White) continue;
    std::vector<std::pair<Pc, size_t>> stack{{root, 0}};
    color[root] = Grey;
    while (!stack.empty()) {
      auto& [p, i] = stack.back();
      const auto& edges = thread.locations[p].edges;
      if (i == edges.size()) {
        color[p] = Black;
        stack.pop_back();
        continue;
      }
      Pc q = edges[i++];
      if (r[q]) continue;
      if (color[q] == Grey) {
        std::vector<SourceSpan> spans;
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          spans.push_back(thread.locations[it->first].span);
          if (it->first == q) break;
        }
        std::reverse(spans.begin(), spans.end());
        std::ostringstream msg;
        msg << "thread " << thread.tid << ": loop without a yield point (add 'yield;' to the loop body) at";
        for (const auto& s : spans) msg << ' ' << s.str();
        throw LoweringError(std::move(spans), msg.str());
      }
      if (color[q] == White) {
        color[q] = Grey;
        parent[q] = p;
        stack.emplace_back(q, 0);
      }
    }
  }
  return r;
}

ProgramModel lower(const Ast& input_ast, const InputBinding& inputs) {
  bool sugared = std::any_of(input_ast.threads.begin(), input_ast.threads.end(),
                             [](const ThreadDecl& t) { return has_sugar(t.body); });
  const Ast ast = sugared ? desugar(input_ast) : input_ast;

  ProgramModel model;
  model.name = ast.file;

  Env env;
  for (const auto& [name, value] : inputs) {
    auto it = std::find_if(ast.input_decls.begin(), ast.input_decls.end(),
                           [&](const InputDecl& d) { return d.name == name; });
    if (it == ast.input_decls.end()) throw LoweringError({}, "binding for undeclared input '" + name + "'");
  }
  for (const auto& d : ast.input_decls) {
    auto it = inputs.find(d.name);
    if (it == inputs.end()) throw LoweringError({d.span}, "input '" + d.name + "' is not bound");
    if (it->second < d.lo || it->second > d.hi)
      throw LoweringError({d.span}, "input '" + d.name + "' = " + std::to_string(it->second) + " outside " +
                                        std::to_string(d.lo) + ".." + std::to_string(d.hi));
    env[d.name] = it->second;
  }
  model.inputs = inputs;

  for (const auto& d : ast.lock_decls) model.locks.push_back(d.name);

  for (const auto& d : ast.shared_decls) {
    VarInfo v;
    v.name = d.name;
    v.is_array = d.is_array;
    v.offset = model.layout.size;
    if (d.is_array) {
      int64_t len = eval_const(*d.length, env);
      if (len < 1 || len > (1 << 20)) throw LoweringError({d.span}, "array '" + d.name + "' has invalid length " + std::to_string(len));
      v.length = static_cast<uint32_t>(len);
    }
    std::vector<int64_t> init(v.length, 0);
    if (d.init_is_list) {
      if (d.init.size() != v.length)
        throw LoweringError({d.span}, "initializer of '" + d.name + "' has " + std::to_string(d.init.size()) +
                                          " values, expected " + std::to_string(v.length));
      for (size_t i = 0; i < init.size(); ++i) init[i] = eval_const(d.init[i], env);
    } else if (!d.init.empty()) {
      std::fill(init.begin(), init.end(), eval_const(d.init[0], env));
    }
    model.initial_shared.insert(model.initial_shared.end(), init.begin(), init.end());
    model.layout.size += v.length;
    model.layout.vars.push_back(std::move(v));
  }

  if (ast.threads.empty()) throw LoweringError({}, "program has no threads");
  if (ast.threads.size() > kMaxThreads) throw LoweringError({}, "too many threads");
  model.threads.resize(ast.threads.size());
  for (size_t i = 0; i < ast.threads.size(); ++i) {
    const ThreadDecl& decl = ast.threads[i];
    if (decl.tid != i + 1) throw LoweringError({decl.span}, "thread ids must be 1..N in order");
    ThreadModel& thread = model.threads[i];
    ThreadLowering(model, env, decl).run(thread, model.statements);
    thread.local_offset = model.total_locals;
    model.total_locals += static_cast<uint32_t>(thread.local_names.size());
    thread.r_set = compute_yield_points(thread);
  }
  model.validate();
  return model;
}

}  // namespace mcrace
