#include <algorithm>

#include "mcrace/frontend.hpp"

namespace mcrace {
namespace {

class Desugarer {
 public:
  explicit Desugarer(Ast& ast) : ast_(ast) {}

  void run() {
    for (auto& t : ast_.threads) t.body = lower_block(t.body);
  }

 private:
  void ensure_lock(const std::string& name, const SourceSpan& span) {
    bool known = std::any_of(ast_.lock_decls.begin(), ast_.lock_decls.end(),
                             [&](const LockDecl& d) { return d.name == name; });
    if (!known) ast_.lock_decls.push_back({name, span});
  }

  static Stmt lock_op(Stmt::Kind kind, const std::string& lock, const SourceSpan& span) {
    Stmt s;
    s.kind = kind;
    s.name = lock;
    s.span = span;
    return s;
  }

  std::vector<Stmt> lower_block(const std::vector<Stmt>& body) {
    std::vector<Stmt> out;
    out.reserve(body.size());
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::Atomic || s.kind == Stmt::Kind::Critical) {
        std::string lock = s.kind == Stmt::Kind::Atomic ? "__atomic" : "__crit_" + s.name;
        ensure_lock(lock, s.span);
        out.push_back(lock_op(Stmt::Kind::Acquire, lock, s.span));
        for (auto& inner : lower_block(s.body)) out.push_back(std::move(inner));
        out.push_back(lock_op(Stmt::Kind::Release, lock, s.span));
        continue;
      }
      Stmt copy = s;
      copy.body = lower_block(s.body);
      copy.else_body = lower_block(s.else_body);
      out.push_back(std::move(copy));
    }
    return out;
  }

  Ast& ast_;
};

}  // namespace

Ast desugar(const Ast& ast) {
  Ast out = ast;
  Desugarer(out).run();
  return out;
}

}  // namespace mcrace
