#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcrace {

struct SourceSpan {
  std::string file;
  uint32_t line = 1;
  uint32_t column = 1;
  uint32_t length = 0;

  std::string str() const;

  bool operator==(const SourceSpan&) const = default;
};

enum class UnaryOp : uint8_t { Neg, Not };

enum class BinaryOp : uint8_t {
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne,
  And, Or,
};

const char* to_string(UnaryOp op);
const char* to_string(BinaryOp op);

struct Expr {
  enum class Kind : uint8_t { IntLit, Var, Index, Unary, Binary };

  Kind kind = Kind::IntLit;
  int64_t value = 0;           // IntLit
  std::string name;            // Var, Index
  UnaryOp unary = UnaryOp::Neg;
  BinaryOp binary = BinaryOp::Add;
  std::vector<Expr> operands;  // Index: [index]; Unary: [x]; Binary: [lhs, rhs]
  SourceSpan span;

  static Expr literal(int64_t v, SourceSpan span = {});
  static Expr var(std::string name, SourceSpan span = {});
  static Expr index(std::string name, Expr idx, SourceSpan span = {});
  static Expr unary_op(UnaryOp op, Expr x, SourceSpan span = {});
  static Expr binary_op(BinaryOp op, Expr lhs, Expr rhs, SourceSpan span = {});
};

struct Stmt {
  enum class Kind : uint8_t {
    Assign,     // name[index]? = value
    LocalDecl,  // local int name (= value)?
    Acquire,
    Release,
    Barrier,
    Yield,
    Atomic,     // body
    Critical,   // name, body
    If,         // value = condition, body, else_body
    For,        // name = loop variable, lo, hi, body
    While,      // value = condition, body
    Choose,     // name[index]? = choose(lo..hi)
  };

  Kind kind = Kind::Yield;
  std::string name;
  std::optional<Expr> index;
  std::optional<Expr> value;
  std::optional<Expr> lo;
  std::optional<Expr> hi;
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  SourceSpan span;
};

struct SharedDecl {
  std::string name;
  bool is_array = false;
  std::optional<Expr> length;  // constant expression; arrays only
  std::vector<Expr> init;      // empty: zero; one value: broadcast; else per element
  bool init_is_list = false;
  SourceSpan span;
};

struct LockDecl {
  std::string name;
  SourceSpan span;
};

struct InputDecl {
  std::string name;
  int64_t lo = 0;
  int64_t hi = 0;
  SourceSpan span;
};

struct ThreadDecl {
  uint32_t tid = 0;
  std::vector<Stmt> body;
  SourceSpan span;
};

struct Ast {
  std::string file;
  std::vector<SharedDecl> shared_decls;
  std::vector<LockDecl> lock_decls;
  std::vector<InputDecl> input_decls;
  std::vector<ThreadDecl> threads;
};

// Structural equality; spans are ignored.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const Stmt& a, const Stmt& b);
bool same_structure(const Ast& a, const Ast& b);

// Renders the AST back to concrete syntax that parse() accepts.
std::string pretty_print(const Ast& ast);
std::string pretty_print(const Expr& e);

}  // namespace mcrace
