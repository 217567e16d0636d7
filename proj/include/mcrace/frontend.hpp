#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mcrace/ast.hpp"
#include "mcrace/model.hpp"

namespace mcrace {

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceSpan span, const std::string& message)
      : std::runtime_error(span.str() + ": " + message), span_(std::move(span)) {}
  const SourceSpan& span() const { return span_; }

 private:
  SourceSpan span_;
};

class LoweringError : public std::runtime_error {
 public:
  LoweringError(std::vector<SourceSpan> spans, const std::string& message)
      : std::runtime_error(message), spans_(std::move(spans)) {}
  const std::vector<SourceSpan>& spans() const { return spans_; }

 private:
  std::vector<SourceSpan> spans_;
};

// Parses and checks a program. Identifiers beginning with "__" are reserved
// for locks introduced by desugar().
Ast parse(std::string_view source, std::string file = "<input>");

// Replaces atomic and critical blocks with acquire/release pairs on the
// implicit locks __atomic and __crit_<name>.
Ast desugar(const Ast& ast);

using InputBinding = std::map<std::string, int64_t>;

// Builds the program model for one concrete input assignment. Runs desugar()
// first if the AST still contains atomic/critical blocks.
ProgramModel lower(const Ast& ast, const InputBinding& inputs);

// Returns Acquire ∪ Release ∪ yield locations of one thread and checks that
// every cycle of the thread's location graph passes through one of them.
// Throws LoweringError naming the spans of an uncovered cycle.
std::vector<bool> compute_yield_points(const ThreadModel& thread);

}  // namespace mcrace
