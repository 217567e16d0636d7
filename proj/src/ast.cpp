#include "mcrace/ast.hpp"

#include <sstream>

namespace mcrace {

std::string SourceSpan::str() const {
  std::ostringstream os;
  os << (file.empty() ? "<input>" : file) << ':' << line << ':' << column;
  return os.str();
}

const char* to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Not: return "!";
  }
  return "?";
}

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

Expr Expr::literal(int64_t v, SourceSpan span) {
  Expr e;
  e.kind = Kind::IntLit;
  e.value = v;
  e.span = std::move(span);
  return e;
}

Expr Expr::var(std::string name, SourceSpan span) {
  Expr e;
  e.kind = Kind::Var;
  e.name = std::move(name);
  e.span = std::move(span);
  return e;
}

Expr Expr::index(std::string name, Expr idx, SourceSpan span) {
  Expr e;
  e.kind = Kind::Index;
  e.name = std::move(name);
  e.operands.push_back(std::move(idx));
  e.span = std::move(span);
  return e;
}

Expr Expr::unary_op(UnaryOp op, Expr x, SourceSpan span) {
  Expr e;
  e.kind = Kind::Unary;
  e.unary = op;
  e.operands.push_back(std::move(x));
  e.span = std::move(span);
  return e;
}

Expr Expr::binary_op(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span) {
  Expr e;
  e.kind = Kind::Binary;
  e.binary = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  e.span = std::move(span);
  return e;
}

namespace {

template <class T, class F>
bool all_same(const std::vector<T>& a, const std::vector<T>& b, F&& same) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

bool same_opt(const std::optional<Expr>& a, const std::optional<Expr>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_structure(*a, *b);
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::IntLit: return a.value == b.value;
    case Expr::Kind::Var: return a.name == b.name;
    case Expr::Kind::Index:
      return a.name == b.name && same_structure(a.operands[0], b.operands[0]);
    case Expr::Kind::Unary:
      return a.unary == b.unary && same_structure(a.operands[0], b.operands[0]);
    case Expr::Kind::Binary:
      return a.binary == b.binary && same_structure(a.operands[0], b.operands[0]) &&
             same_structure(a.operands[1], b.operands[1]);
  }
  return false;
}

bool same_structure(const Stmt& a, const Stmt& b) {
  auto same_stmt = [](const Stmt& x, const Stmt& y) { return same_structure(x, y); };
  return a.kind == b.kind && a.name == b.name && same_opt(a.index, b.index) &&
         same_opt(a.value, b.value) && same_opt(a.lo, b.lo) && same_opt(a.hi, b.hi) &&
         a.has_else == b.has_else && all_same(a.body, b.body, same_stmt) &&
         all_same(a.else_body, b.else_body, same_stmt);
}

bool same_structure(const Ast& a, const Ast& b) {
  auto same_expr = [](const Expr& x, const Expr& y) { return same_structure(x, y); };
  auto same_stmt = [](const Stmt& x, const Stmt& y) { return same_structure(x, y); };
  return all_same(a.shared_decls, b.shared_decls,
                  [&](const SharedDecl& x, const SharedDecl& y) {
                    return x.name == y.name && x.is_array == y.is_array &&
                           same_opt(x.length, y.length) && x.init_is_list == y.init_is_list &&
                           all_same(x.init, y.init, same_expr);
                  }) &&
         all_same(a.lock_decls, b.lock_decls,
                  [](const LockDecl& x, const LockDecl& y) { return x.name == y.name; }) &&
         all_same(a.input_decls, b.input_decls,
                  [](const InputDecl& x, const InputDecl& y) {
                    return x.name == y.name && x.lo == y.lo && x.hi == y.hi;
                  }) &&
         all_same(a.threads, b.threads, [&](const ThreadDecl& x, const ThreadDecl& y) {
           return x.tid == y.tid && all_same(x.body, y.body, same_stmt);
         });
}

namespace {

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return 1;
    case BinaryOp::And: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne: return 3;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 6;
  }
  return 0;
}

// Binary operands are parenthesized unless they bind tighter; negative
// literals and unary operands always are, so the output reparses to the
// same tree.
void print_expr(std::ostream& os, const Expr& e, int min_prec) {
  switch (e.kind) {
    case Expr::Kind::IntLit:
      if (e.value < 0)
        os << '(' << e.value << ')';
      else
        os << e.value;
      return;
    case Expr::Kind::Var: os << e.name; return;
    case Expr::Kind::Index:
      os << e.name << '[';
      print_expr(os, e.operands[0], 0);
      os << ']';
      return;
    case Expr::Kind::Unary:
      os << to_string(e.unary) << '(';
      print_expr(os, e.operands[0], 0);
      os << ')';
      return;
    case Expr::Kind::Binary: {
      int p = precedence(e.binary);
      bool paren = p < min_prec;
      if (paren) os << '(';
      print_expr(os, e.operands[0], p);
      os << ' ' << to_string(e.binary) << ' ';
      print_expr(os, e.operands[1], p + 1);
      if (paren) os << ')';
      return;
    }
  }
}

void indent(std::ostream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "  ";
}

void print_block(std::ostream& os, const std::vector<Stmt>& body, int depth);

void print_stmt(std::ostream& os, const Stmt& s, int depth) {
  indent(os, depth);
  auto lvalue = [&] {
    os << s.name;
    if (s.index) {
      os << '[';
      print_expr(os, *s.index, 0);
      os << ']';
    }
  };
  switch (s.kind) {
    case Stmt::Kind::Assign:
      lvalue();
      os << " = ";
      print_expr(os, *s.value, 0);
      os << ";\n";
      break;
    case Stmt::Kind::LocalDecl:
      os << "local int " << s.name;
      if (s.value) {
        os << " = ";
        print_expr(os, *s.value, 0);
      }
      os << ";\n";
      break;
    case Stmt::Kind::Acquire: os << "acquire(" << s.name << ");\n"; break;
    case Stmt::Kind::Release: os << "release(" << s.name << ");\n"; break;
    case Stmt::Kind::Barrier: os << "barrier;\n"; break;
    case Stmt::Kind::Yield: os << "yield;\n"; break;
    case Stmt::Kind::Atomic:
      os << "atomic ";
      print_block(os, s.body, depth);
      break;
    case Stmt::Kind::Critical:
      os << "critical(" << s.name << ") ";
      print_block(os, s.body, depth);
      break;
    case Stmt::Kind::If:
      os << "if (";
      print_expr(os, *s.value, 0);
      os << ") ";
      print_block(os, s.body, depth);
      if (s.has_else) {
        indent(os, depth);
        os << "else ";
        print_block(os, s.else_body, depth);
      }
      break;
    case Stmt::Kind::For:
      os << "for (" << s.name << " = ";
      print_expr(os, *s.lo, 0);
      os << "; " << s.name << " < ";
      print_expr(os, *s.hi, 0);
      os << "; " << s.name << "++) ";
      print_block(os, s.body, depth);
      break;
    case Stmt::Kind::While:
      os << "while (";
      print_expr(os, *s.value, 0);
      os << ") ";
      print_block(os, s.body, depth);
      break;
    case Stmt::Kind::Choose:
      lvalue();
      os << " = choose(";
      print_expr(os, *s.lo, 0);
      os << " .. ";
      print_expr(os, *s.hi, 0);
      os << ");\n";
      break;
  }
}

void print_block(std::ostream& os, const std::vector<Stmt>& body, int depth) {
  os << "{\n";
  for (const auto& s : body) print_stmt(os, s, depth + 1);
  indent(os, depth);
  os << "}\n";
}

}  // namespace

std::string pretty_print(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e, 0);
  return os.str();
}

std::string pretty_print(const Ast& ast) {
  std::ostringstream os;
  for (const auto& d : ast.input_decls) os << "input " << d.name << " in " << d.lo << " .. " << d.hi << ";\n";
  for (const auto& d : ast.shared_decls) {
    os << "shared int " << d.name;
    if (d.is_array) {
      os << '[';
      print_expr(os, *d.length, 0);
      os << ']';
    }
    if (!d.init.empty()) {
      os << " = ";
      if (d.init_is_list) {
        os << '{';
        for (size_t i = 0; i < d.init.size(); ++i) {
          if (i) os << ", ";
          print_expr(os, d.init[i], 0);
        }
        os << '}';
      } else {
        print_expr(os, d.init[0], 0);
      }
    }
    os << ";\n";
  }
  for (const auto& d : ast.lock_decls) os << "lock " << d.name << ";\n";
  for (const auto& t : ast.threads) {
    os << "\nthread " << t.tid << ' ';
    print_block(os, t.body, 0);
  }
  return os.str();
}

}  // namespace mcrace
