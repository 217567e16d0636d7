#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <map>
#include <set>

#include "mcrace/frontend.hpp"

namespace mcrace {
namespace {

enum class Tok : uint8_t {
  Ident, Int, End,
  LBrace, RBrace, LParen, RParen, LBracket, RBracket, Semi, Comma,
  Assign, Eq, Ne, Lt, Le, Gt, Ge, Plus, Minus, Star, Slash, Percent,
  Bang, AndAnd, OrOr, DotDot, PlusPlus,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  uint64_t magnitude = 0;  // Int
  SourceSpan span;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.span = {file_, line_, col_, 1};
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        t.span.length = 0;
        out.push_back(std::move(t));
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        t.kind = Tok::Int;
        t.text = std::string(src_.substr(start, pos_ - start));
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.magnitude);
        if (ec != std::errc() || t.magnitude > (uint64_t{1} << 63))
          throw ParseError(t.span, "integer literal out of range: " + t.text);
      } else {
        t.kind = punct(t.text);
      }
      t.span.length = static_cast<uint32_t>(std::max<size_t>(1, t.text.size()));
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  Tok punct(std::string& text) {
    SourceSpan here{file_, line_, col_, 1};
    char c = src_[pos_];
    char n = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
    auto two = [&](Tok k) {
      text = std::string(src_.substr(pos_, 2));
      advance();
      advance();
      return k;
    };
    auto one = [&](Tok k) {
      text = std::string(1, c);
      advance();
      return k;
    };
    switch (c) {
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case '[': return one(Tok::LBracket);
      case ']': return one(Tok::RBracket);
      case ';': return one(Tok::Semi);
      case ',': return one(Tok::Comma);
      case '*': return one(Tok::Star);
      case '/': return one(Tok::Slash);
      case '%': return one(Tok::Percent);
      case '-': return one(Tok::Minus);
      case '+': return n == '+' ? two(Tok::PlusPlus) : one(Tok::Plus);
      case '=': return n == '=' ? two(Tok::Eq) : one(Tok::Assign);
      case '!': return n == '=' ? two(Tok::Ne) : one(Tok::Bang);
      case '<': return n == '=' ? two(Tok::Le) : one(Tok::Lt);
      case '>': return n == '=' ? two(Tok::Ge) : one(Tok::Gt);
      case '&':
        if (n == '&') return two(Tok::AndAnd);
        break;
      case '|':
        if (n == '|') return two(Tok::OrOr);
        break;
      case '.':
        if (n == '.') return two(Tok::DotDot);
        break;
      default: break;
    }
    throw ParseError(here, std::string("unexpected character '") + c + "'");
  }

  std::string_view src_;
  std::string file_;
  size_t pos_ = 0;
  uint32_t line_ = 1;
  uint32_t col_ = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "shared", "int",   "lock",  "input",  "in",       "thread", "local", "acquire", "release",
    "barrier", "yield", "atomic", "critical", "if",   "else",   "for",   "while",   "choose",
};

enum class NameKind : uint8_t { Scalar, Array, Lock, Input, Local, LoopVar };

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)) { ast_.file = std::move(file); }

  Ast run() {
    while (!at_keyword("thread")) {
      if (peek().kind == Tok::End) throw ParseError(peek().span, "expected at least one thread");
      parse_decl();
    }
    while (at_keyword("thread")) parse_thread();
    if (peek().kind != Tok::End) throw ParseError(peek().span, "expected 'thread' or end of input");
    check_thread_ids();
    return std::move(ast_);
  }

 private:
  const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_keyword(std::string_view kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  const Token& expect(Tok k, const char* what) {
    if (!at(k)) throw ParseError(peek().span, std::string("expected ") + what + ", found " + describe(peek()));
    return next();
  }

  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw))
      throw ParseError(peek().span, "expected '" + std::string(kw) + "', found " + describe(peek()));
    next();
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    return "'" + t.text + "'";
  }

  const Token& expect_ident() {
    if (!at(Tok::Ident) || kKeywords.count(peek().text))
      throw ParseError(peek().span, "expected identifier, found " + describe(peek()));
    return next();
  }

  // Identifier introduced by a declaration.
  const Token& expect_new_name() {
    const Token& t = expect_ident();
    if (t.text.rfind("__", 0) == 0) throw ParseError(t.span, "identifiers starting with '__' are reserved: " + t.text);
    return t;
  }

  static SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
    SourceSpan s = a;
    if (b.line == a.line && b.column >= a.column) s.length = b.column + b.length - a.column;
    return s;
  }

  void declare_global(const Token& t, NameKind kind) {
    if (globals_.count(t.text)) throw ParseError(t.span, "duplicate declaration of '" + t.text + "'");
    globals_[t.text] = kind;
  }

  std::optional<NameKind> lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    if (auto it = globals_.find(name); it != globals_.end()) return it->second;
    return std::nullopt;
  }

  void parse_decl() {
    SourceSpan start = peek().span;
    if (at_keyword("shared")) {
      next();
      expect_keyword("int");
      const Token& name = expect_new_name();
      SharedDecl d;
      d.name = name.text;
      d.span = name.span;
      if (at(Tok::LBracket)) {
        next();
        d.is_array = true;
        d.length = parse_const_expr();
        expect(Tok::RBracket, "']'");
      }
      if (at(Tok::Assign)) {
        next();
        if (at(Tok::LBrace)) {
          if (!d.is_array) throw ParseError(peek().span, "initializer list for scalar '" + d.name + "'");
          next();
          d.init_is_list = true;
          d.init.push_back(parse_const_expr());
          while (at(Tok::Comma)) {
            next();
            d.init.push_back(parse_const_expr());
          }
          expect(Tok::RBrace, "'}'");
        } else {
          d.init.push_back(parse_const_expr());
        }
      }
      expect(Tok::Semi, "';'");
      declare_global(name, d.is_array ? NameKind::Array : NameKind::Scalar);
      ast_.shared_decls.push_back(std::move(d));
    } else if (at_keyword("lock")) {
      next();
      for (;;) {
        const Token& name = expect_new_name();
        declare_global(name, NameKind::Lock);
        ast_.lock_decls.push_back({name.text, name.span});
        if (!at(Tok::Comma)) break;
        next();
      }
      expect(Tok::Semi, "';'");
    } else if (at_keyword("input")) {
      next();
      const Token& name = expect_new_name();
      expect_keyword("in");
      int64_t lo = parse_signed_int();
      expect(Tok::DotDot, "'..'");
      int64_t hi = parse_signed_int();
      expect(Tok::Semi, "';'");
      if (lo > hi) throw ParseError(name.span, "empty input range for '" + name.text + "'");
      declare_global(name, NameKind::Input);
      ast_.input_decls.push_back({name.text, lo, hi, name.span});
    } else {
      throw ParseError(start, "expected declaration ('shared', 'lock', 'input') or 'thread', found " + describe(peek()));
    }
  }

  int64_t parse_signed_int() {
    bool neg = false;
    if (at(Tok::Minus)) {
      next();
      neg = true;
    }
    const Token& t = expect(Tok::Int, "integer");
    if (!neg && t.magnitude > static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
      throw ParseError(t.span, "integer literal out of range: " + t.text);
    return neg ? static_cast<int64_t>(0 - t.magnitude) : static_cast<int64_t>(t.magnitude);
  }

  void parse_thread() {
    SourceSpan start = peek().span;
    expect_keyword("thread");
    const Token& id = expect(Tok::Int, "thread id");
    if (id.magnitude == 0 || id.magnitude > kMaxThreads)
      throw ParseError(id.span, "thread id must be in 1.." + std::to_string(kMaxThreads));
    ThreadDecl t;
    t.tid = static_cast<uint32_t>(id.magnitude);
    t.span = join(start, id.span);
    for (const auto& other : ast_.threads)
      if (other.tid == t.tid) throw ParseError(id.span, "duplicate thread id " + id.text);
    scopes_.clear();
    scopes_.emplace_back();
    t.body = parse_block();
    scopes_.clear();
    ast_.threads.push_back(std::move(t));
  }

  void check_thread_ids() {
    std::vector<uint32_t> ids;
    for (const auto& t : ast_.threads) ids.push_back(t.tid);
    std::sort(ids.begin(), ids.end());
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] != i + 1) {
        auto it = std::find_if(ast_.threads.begin(), ast_.threads.end(),
                               [&](const ThreadDecl& t) { return t.tid == ids[i]; });
        throw ParseError(it->span, "thread ids must be consecutive from 1; missing thread " + std::to_string(i + 1));
      }
    }
    std::sort(ast_.threads.begin(), ast_.threads.end(),
              [](const ThreadDecl& a, const ThreadDecl& b) { return a.tid < b.tid; });
  }

  std::vector<Stmt> parse_block() {
    expect(Tok::LBrace, "'{'");
    std::vector<Stmt> body;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) throw ParseError(peek().span, "expected '}'");
      body.push_back(parse_stmt());
    }
    next();
    return body;
  }

  std::vector<Stmt> parse_scoped_block(std::optional<std::pair<std::string, NameKind>> binding = std::nullopt) {
    scopes_.emplace_back();
    if (binding) scopes_.back()[binding->first] = binding->second;
    auto body = parse_block();
    // Locals are thread-wide; only loop variables are block scoped.
    auto scope = std::move(scopes_.back());
    scopes_.pop_back();
    for (auto& [name, kind] : scope)
      if (kind == NameKind::Local) scopes_.front()[name] = kind;
    return body;
  }

  void check_lock(const Token& t) {
    auto k = lookup(t.text);
    if (!k) throw ParseError(t.span, "undeclared lock '" + t.text + "'");
    if (*k != NameKind::Lock) throw ParseError(t.span, "'" + t.text + "' is not a lock");
  }

  Stmt parse_stmt() {
    const Token& head = peek();
    SourceSpan start = head.span;
    Stmt s;
    s.span = start;
    if (head.kind != Tok::Ident) throw ParseError(head.span, "expected statement, found " + describe(head));
    const std::string& kw = head.text;
    if (kw == "local") {
      next();
      expect_keyword("int");
      const Token& name = expect_new_name();
      if (lookup(name.text)) throw ParseError(name.span, "duplicate declaration of '" + name.text + "'");
      for (const auto& scope : scopes_)
        if (scope.count(name.text)) throw ParseError(name.span, "duplicate declaration of '" + name.text + "'");
      s.kind = Stmt::Kind::LocalDecl;
      s.name = name.text;
      if (at(Tok::Assign)) {
        next();
        s.value = parse_expr();
      }
      s.span = join(start, expect(Tok::Semi, "';'").span);
      scopes_.back()[name.text] = NameKind::Local;
      return s;
    }
    if (kw == "acquire" || kw == "release") {
      next();
      expect(Tok::LParen, "'('");
      const Token& name = expect_ident();
      check_lock(name);
      expect(Tok::RParen, "')'");
      s.kind = kw == "acquire" ? Stmt::Kind::Acquire : Stmt::Kind::Release;
      s.name = name.text;
      s.span = join(start, expect(Tok::Semi, "';'").span);
      return s;
    }
    if (kw == "barrier" || kw == "yield") {
      next();
      s.kind = kw == "barrier" ? Stmt::Kind::Barrier : Stmt::Kind::Yield;
      s.span = join(start, expect(Tok::Semi, "';'").span);
      return s;
    }
    if (kw == "atomic") {
      next();
      s.kind = Stmt::Kind::Atomic;
      s.body = parse_scoped_block();
      return s;
    }
    if (kw == "critical") {
      next();
      expect(Tok::LParen, "'('");
      const Token& name = expect_new_name();
      expect(Tok::RParen, "')'");
      s.kind = Stmt::Kind::Critical;
      s.name = name.text;
      s.body = parse_scoped_block();
      return s;
    }
    if (kw == "if") {
      next();
      expect(Tok::LParen, "'('");
      s.kind = Stmt::Kind::If;
      s.value = parse_expr();
      expect(Tok::RParen, "')'");
      s.body = parse_scoped_block();
      if (at_keyword("else")) {
        next();
        s.has_else = true;
        s.else_body = parse_scoped_block();
      }
      return s;
    }
    if (kw == "while") {
      next();
      expect(Tok::LParen, "'('");
      s.kind = Stmt::Kind::While;
      s.value = parse_expr();
      expect(Tok::RParen, "')'");
      s.body = parse_scoped_block();
      return s;
    }
    if (kw == "for") {
      next();
      expect(Tok::LParen, "'('");
      const Token& var = expect_new_name();
      if (lookup(var.text)) throw ParseError(var.span, "loop variable '" + var.text + "' shadows a declaration");
      expect(Tok::Assign, "'='");
      s.kind = Stmt::Kind::For;
      s.name = var.text;
      s.lo = parse_const_expr();
      expect(Tok::Semi, "';'");
      const Token& v2 = expect_ident();
      if (v2.text != var.text) throw ParseError(v2.span, "for condition must test loop variable '" + var.text + "'");
      expect(Tok::Lt, "'<'");
      s.hi = parse_const_expr();
      expect(Tok::Semi, "';'");
      const Token& v3 = expect_ident();
      if (v3.text != var.text) throw ParseError(v3.span, "for increment must update loop variable '" + var.text + "'");
      expect(Tok::PlusPlus, "'++'");
      expect(Tok::RParen, "')'");
      s.body = parse_scoped_block(std::make_pair(var.text, NameKind::LoopVar));
      return s;
    }
    if (kKeywords.count(kw)) throw ParseError(head.span, "unexpected '" + kw + "'");

    // Assignment or choose.
    const Token& name = next();
    auto kind = lookup(name.text);
    if (!kind) throw ParseError(name.span, "undeclared identifier '" + name.text + "'");
    s.name = name.text;
    if (at(Tok::LBracket)) {
      if (*kind != NameKind::Array) throw ParseError(name.span, "'" + name.text + "' is not an array");
      next();
      s.index = parse_expr();
      expect(Tok::RBracket, "']'");
    } else if (*kind == NameKind::Array) {
      throw ParseError(name.span, "array '" + name.text + "' must be indexed");
    }
    if (*kind == NameKind::Lock || *kind == NameKind::Input || *kind == NameKind::LoopVar)
      throw ParseError(name.span, "cannot assign to '" + name.text + "'");
    expect(Tok::Assign, "'='");
    if (at_keyword("choose") && peek(1).kind == Tok::LParen) {
      next();
      next();
      s.kind = Stmt::Kind::Choose;
      s.lo = parse_const_expr();
      expect(Tok::DotDot, "'..'");
      s.hi = parse_const_expr();
      expect(Tok::RParen, "')'");
    } else {
      s.kind = Stmt::Kind::Assign;
      s.value = parse_expr();
    }
    s.span = join(start, expect(Tok::Semi, "';'").span);
    return s;
  }

  // Constant expressions may reference inputs and enclosing loop variables.
  Expr parse_const_expr() {
    bool saved = const_only_;
    const_only_ = true;
    Expr e = parse_expr();
    const_only_ = saved;
    return e;
  }

  Expr parse_expr() { return parse_binary(1); }

  static std::optional<std::pair<BinaryOp, int>> binop(Tok k) {
    switch (k) {
      case Tok::OrOr: return std::pair{BinaryOp::Or, 1};
      case Tok::AndAnd: return std::pair{BinaryOp::And, 2};
      case Tok::Eq: return std::pair{BinaryOp::Eq, 3};
      case Tok::Ne: return std::pair{BinaryOp::Ne, 3};
      case Tok::Lt: return std::pair{BinaryOp::Lt, 4};
      case Tok::Le: return std::pair{BinaryOp::Le, 4};
      case Tok::Gt: return std::pair{BinaryOp::Gt, 4};
      case Tok::Ge: return std::pair{BinaryOp::Ge, 4};
      case Tok::Plus: return std::pair{BinaryOp::Add, 5};
      case Tok::Minus: return std::pair{BinaryOp::Sub, 5};
      case Tok::Star: return std::pair{BinaryOp::Mul, 6};
      case Tok::Slash: return std::pair{BinaryOp::Div, 6};
      case Tok::Percent: return std::pair{BinaryOp::Mod, 6};
      default: return std::nullopt;
    }
  }

  Expr parse_binary(int min_prec) {
    Expr lhs = parse_unary();
    for (;;) {
      auto op = binop(peek().kind);
      if (!op || op->second < min_prec) return lhs;
      next();
      Expr rhs = parse_binary(op->second + 1);
      SourceSpan span = join(lhs.span, rhs.span);
      lhs = Expr::binary_op(op->first, std::move(lhs), std::move(rhs), span);
    }
  }

  Expr parse_unary() {
    const Token& t = peek();
    if (t.kind == Tok::Minus) {
      next();
      if (at(Tok::Int)) {
        const Token& lit = next();
        return Expr::literal(static_cast<int64_t>(0 - lit.magnitude), join(t.span, lit.span));
      }
      Expr x = parse_unary();
      SourceSpan span = join(t.span, x.span);
      return Expr::unary_op(UnaryOp::Neg, std::move(x), span);
    }
    if (t.kind == Tok::Bang) {
      next();
      Expr x = parse_unary();
      SourceSpan span = join(t.span, x.span);
      return Expr::unary_op(UnaryOp::Not, std::move(x), span);
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      next();
      if (t.magnitude > static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
        throw ParseError(t.span, "integer literal out of range: " + t.text);
      return Expr::literal(static_cast<int64_t>(t.magnitude), t.span);
    }
    if (t.kind == Tok::LParen) {
      next();
      Expr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      next();
      auto kind = lookup(t.text);
      if (!kind) throw ParseError(t.span, "undeclared identifier '" + t.text + "'");
      if (*kind == NameKind::Lock) throw ParseError(t.span, "lock '" + t.text + "' used as a value");
      if (const_only_ && *kind != NameKind::Input && *kind != NameKind::LoopVar)
        throw ParseError(t.span, "'" + t.text + "' is not a constant (inputs and loop variables only)");
      if (at(Tok::LBracket)) {
        if (*kind != NameKind::Array) throw ParseError(t.span, "'" + t.text + "' is not an array");
        next();
        Expr idx = parse_expr();
        const Token& close = expect(Tok::RBracket, "']'");
        return Expr::index(t.text, std::move(idx), join(t.span, close.span));
      }
      if (*kind == NameKind::Array) throw ParseError(t.span, "array '" + t.text + "' must be indexed");
      return Expr::var(t.text, t.span);
    }
    throw ParseError(t.span, "expected expression, found " + describe(t));
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  Ast ast_;
  std::map<std::string, NameKind> globals_;
  std::vector<std::map<std::string, NameKind>> scopes_;
  bool const_only_ = false;
};

}  // namespace

Ast parse(std::string_view source, std::string file) {
  Lexer lexer(source, file);
  Parser parser(lexer.run(), file);
  return parser.run();
}

}  // namespace mcrace
