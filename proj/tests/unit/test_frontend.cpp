#include <gtest/gtest.h>

#include <set>

#include "generator.hpp"
#include "helpers.hpp"
#include "mcrace/frontend.hpp"
#include "mcrace/oracle.hpp"

using namespace mcrace;
using namespace mcrace::testing;

namespace {

const char* kTwoLocks = R"(
shared int x = 0;
lock l1, l2;
thread 1 { acquire(l1); x = 1; release(l1); }
thread 2 { acquire(l2); x = 2; release(l2); }
)";

std::string parse_error(const std::string& src) {
  try {
    parse(src);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Parse, MinimalProgram) {
  Ast ast = parse("shared int x = 0; lock l; thread 1 { acquire(l); x = 1; release(l); }");
  ASSERT_EQ(ast.shared_decls.size(), 1u);
  EXPECT_FALSE(ast.shared_decls[0].is_array);
  ASSERT_EQ(ast.lock_decls.size(), 1u);
  ASSERT_EQ(ast.threads.size(), 1u);
  ASSERT_EQ(ast.threads[0].body.size(), 3u);
  EXPECT_EQ(ast.threads[0].body[0].kind, Stmt::Kind::Acquire);
  EXPECT_EQ(ast.threads[0].body[1].kind, Stmt::Kind::Assign);
  EXPECT_EQ(ast.threads[0].body[2].kind, Stmt::Kind::Release);
}

TEST(Parse, TwoLockExample) {
  Ast ast = parse(kTwoLocks);
  ASSERT_EQ(ast.threads.size(), 2u);
  EXPECT_EQ(ast.threads[0].tid, 1u);
  EXPECT_EQ(ast.threads[1].tid, 2u);
  EXPECT_EQ(ast.lock_decls.size(), 2u);
}

TEST(Parse, UndeclaredIdentifierNamed) {
  try {
    parse("thread 1 { x = 1; }", "t.mtp");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("x"), std::string::npos);
    EXPECT_EQ(e.span().line, 1u);
    EXPECT_EQ(e.span().column, 12u);
    EXPECT_EQ(e.span().file, "t.mtp");
  }
}

TEST(Parse, SemanticErrors) {
  EXPECT_NE(parse_error("thread 1 { } thread 1 { }"), "");
  EXPECT_NE(parse_error("thread 1 { } thread 3 { }"), "");
  EXPECT_NE(parse_error("thread 2 { }"), "");
  EXPECT_NE(parse_error("shared int x; shared int x; thread 1 { }"), "");
  EXPECT_NE(parse_error("shared int x; lock x; thread 1 { }"), "");
  EXPECT_NE(parse_error("shared int a[2]; thread 1 { a = 1; }"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { x[0] = 1; }"), "");
  EXPECT_NE(parse_error("lock l; thread 1 { l = 1; }"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { acquire(x); }"), "");
  EXPECT_NE(parse_error("shared int __x; thread 1 { }"), "");
  EXPECT_NE(parse_error("input N in 3..1; thread 1 { }"), "");
  EXPECT_NE(parse_error("thread 1 { y = 1; local int y; }"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { x = 1 }"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { x = (1; }"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { x = 1; } junk"), "");
  EXPECT_NE(parse_error("shared int x; thread 1 { for (i = 0; j < 2; i++) { x = i; } }"), "");
}

TEST(Parse, CommentsAndUtf8Columns) {
  Ast ast = parse("// señal\nshared int x; // é\nthread 1 {\n  x = 1; // ünïcode\n}\n", "u.mtp");
  ASSERT_EQ(ast.threads[0].body.size(), 1u);
  EXPECT_EQ(ast.threads[0].body[0].span.line, 4u);
  EXPECT_EQ(ast.threads[0].body[0].span.column, 3u);
  std::string err = parse_error("shared int é;");
  EXPECT_NE(err.find("1:12"), std::string::npos) << err;
}

TEST(Desugar, AtomicBecomesLockPair) {
  Ast ast = desugar(parse("shared int v; thread 1 { atomic { v = v + 1; } }"));
  const auto& body = ast.threads[0].body;
  ASSERT_EQ(body.size(), 3u);
  EXPECT_EQ(body[0].kind, Stmt::Kind::Acquire);
  EXPECT_EQ(body[0].name, "__atomic");
  EXPECT_EQ(body[1].kind, Stmt::Kind::Assign);
  EXPECT_EQ(body[2].kind, Stmt::Kind::Release);
  EXPECT_EQ(body[2].name, "__atomic");
  ASSERT_EQ(ast.lock_decls.size(), 1u);
  EXPECT_EQ(ast.lock_decls[0].name, "__atomic");
}

TEST(Desugar, SameCriticalNameSharesLock) {
  const char* src = R"(
shared int x = 0;
thread 1 { critical(c) { x = x + 1; } }
thread 2 { critical(c) { x = x + 1; } }
)";
  Ast ast = desugar(parse(src));
  ASSERT_EQ(ast.lock_decls.size(), 1u);
  EXPECT_EQ(ast.lock_decls[0].name, "__crit_c");
  EXPECT_EQ(ast.threads[0].body[0].name, "__crit_c");
  EXPECT_EQ(ast.threads[1].body[0].name, "__crit_c");

  // Mutual exclusion: no race, and both increments always land.
  ProgramModel m = lower(ast, {});
  RaceVerdict v = explore_full(m);
  EXPECT_EQ(v.verdict, Verdict::RaceFree);
  std::set<int64_t> finals;
  for (const auto& s : v.final_states) finals.insert(s.shared[0]);
  EXPECT_EQ(finals, std::set<int64_t>{2});

  // Different names do not exclude each other.
  Ast split = parse("shared int x = 0; thread 1 { critical(a) { x = x + 1; } } thread 2 { critical(b) { x = x + 1; } }");
  EXPECT_EQ(explore_full(lower(split, {})).verdict, Verdict::Racy);
}

TEST(Desugar, IdentityWithoutSugar) {
  Ast ast = parse(kTwoLocks);
  EXPECT_TRUE(same_structure(desugar(ast), ast));
}

TEST(Desugar, RemovesAllSugarAndKeepsLocks) {
  ProgramGenerator gen(7);
  for (int k = 0; k < 200; ++k) {
    Ast ast = parse(gen.next());
    Ast d = desugar(ast);
    EXPECT_FALSE(contains_sugar(d));
    for (const auto& l : ast.lock_decls)
      EXPECT_TRUE(std::any_of(d.lock_decls.begin(), d.lock_decls.end(),
                              [&](const LockDecl& x) { return x.name == l.name; }));
  }
}

TEST(Lower, LockBodyIsFourStates) {
  ProgramModel m = lower(parse("shared int x; lock l; thread 1 { acquire(l); x = 1; release(l); }"), {});
  const ThreadModel& t = m.thread(1);
  auto path = reachable_kinds(t);
  ASSERT_EQ(path.size(), 4u);
  EXPECT_EQ(path[0], LocalKind::Acquire);
  EXPECT_EQ(path[1], LocalKind::Nsync);
  EXPECT_EQ(path[2], LocalKind::Release);
  EXPECT_EQ(path[3], LocalKind::Term);
  const Location& acq = t.locations[t.initial];
  EXPECT_EQ(t.locations[acq.next].kind, LocalKind::Nsync);
  EXPECT_EQ(m.locks[acq.lock], "l");
}

TEST(Lower, EmptyBodyIsSingleTerm) {
  ProgramModel m = lower(parse("thread 1 { }"), {});
  auto kinds = reachable_kinds(m.thread(1));
  ASSERT_EQ(kinds.size(), 1u);
  EXPECT_EQ(kinds[0], LocalKind::Term);
}

TEST(Lower, WhileWithYieldFormsCoveredCycle) {
  const char* src = R"(
shared int flag = 0;
lock m;
thread 1 { while (flag == 0) { yield; } }
thread 2 { acquire(m); flag = 1; release(m); }
)";
  ProgramModel m = lower(parse(src), {});
  const ThreadModel& t = m.thread(1);
  auto cycle = find_cycle(t);
  ASSERT_FALSE(cycle.empty());
  bool covered = false;
  for (Pc p : cycle) covered |= t.in_r(p) && t.locations[p].yield;
  EXPECT_TRUE(covered);
  EXPECT_NO_THROW(compute_yield_points(t));
  // The busy wait terminates exploration (and races on flag).
  RaceVerdict v = explore_full(m);
  EXPECT_EQ(v.verdict, Verdict::Racy);
  EXPECT_TRUE(v.incomplete.empty());
}

TEST(Lower, WhileWithoutYieldRejected) {
  const char* src = "shared int x; thread 1 { while (x == 0) { x = x; } }";
  try {
    lower(parse(src), {});
    FAIL() << "expected LoweringError";
  } catch (const LoweringError& e) {
    EXPECT_FALSE(e.spans().empty());
    EXPECT_EQ(e.spans()[0].line, 1u);
  }
  // Restoring the yield makes it pass.
  EXPECT_NO_THROW(lower(parse("shared int x; thread 1 { while (x == 0) { x = x; yield; } }"), {}));
}

TEST(Lower, WhileWithLockOperationsIsCovered) {
  EXPECT_NO_THROW(lower(parse("shared int x; lock l; thread 1 { local int f = 0; while (f == 0) { acquire(l); f = x; release(l); } }"), {}));
}

TEST(YieldPoints, StraightLineWithAcquire) {
  ProgramModel m = lower(parse("shared int x; lock l; thread 1 { x = 1; acquire(l); x = 2; }"), {});
  const ThreadModel& t = m.thread(1);
  std::vector<Pc> r;
  for (Pc p = 0; p < t.locations.size(); ++p)
    if (t.in_r(p)) r.push_back(p);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(t.locations[r[0]].kind, LocalKind::Acquire);
}

TEST(YieldPoints, UnrolledForIsAcyclic) {
  ProgramModel m = lower(parse("shared int a[3]; lock l; thread 1 { for (i = 0; i < 3; i++) { acquire(l); a[i] = i; release(l); } }"), {});
  const ThreadModel& t = m.thread(1);
  EXPECT_TRUE(find_cycle(t).empty());
  for (Pc p = 0; p < t.locations.size(); ++p) {
    LocalKind k = t.locations[p].kind;
    EXPECT_EQ(t.in_r(p), k == LocalKind::Acquire || k == LocalKind::Release);
  }
}

TEST(YieldPoints, EveryCycleMeetsR) {
  GenParams gp;
  gp.arrays = true;
  ProgramGenerator gen(11, gp);
  for (int k = 0; k < 300; ++k) {
    ProgramModel m = lower_text(gen.next());
    for (const auto& t : m.threads) {
      // Removing R leaves an acyclic graph.
      auto cycle = find_cycle(t, true);
      EXPECT_TRUE(cycle.empty());
    }
  }
}

TEST(Lower, InputsAndConstantExpressions) {
  const char* src = "input N in 1..3; shared int a[N + 1]; thread 1 { for (i = 0; i < N; i++) { a[i + 1] = i * N; } }";
  Ast ast = parse(src);
  ProgramModel m = lower(ast, {{"N", 2}});
  EXPECT_EQ(m.layout.size, 3u);
  EXPECT_THROW(lower(ast, {}), LoweringError);
  EXPECT_THROW(lower(ast, {{"N", 4}}), LoweringError);
  EXPECT_THROW(lower(ast, {{"N", 2}, {"M", 1}}), LoweringError);
  RaceVerdict v = explore_full(m);
  ASSERT_EQ(v.final_states.size(), 1u);
  EXPECT_EQ(v.final_states[0].shared, (std::vector<int64_t>{0, 0, 2}));
}

TEST(Lower, ChooseIsOneLocationWithKStatements) {
  ProgramModel m = lower(parse("shared int x; thread 1 { x = choose(1..3); }"), {});
  const ThreadModel& t = m.thread(1);
  EXPECT_EQ(t.locations[t.initial].kind, LocalKind::Nsync);
  EXPECT_EQ(t.locations[t.initial].stmts.size(), 3u);
}

TEST(Lower, BarrierArrivalPrecedesBarrierLocation) {
  ProgramModel m = lower(parse("thread 1 { barrier; } thread 2 { barrier; }"), {});
  for (const auto& t : m.threads) {
    const Location& first = t.locations[t.initial];
    EXPECT_EQ(first.kind, LocalKind::Nsync);
    EXPECT_EQ(t.locations[m.statement(first.stmts[0]).effect.next].kind, LocalKind::Barrier);
  }
}

TEST(Lower, Deterministic) {
  ProgramGenerator gen(5);
  for (int k = 0; k < 100; ++k) {
    Ast ast = parse(gen.next());
    EXPECT_EQ(fingerprint(lower(ast, {})), fingerprint(lower(ast, {})));
  }
}

TEST(RoundTrip, PrettyPrintThenParse) {
  GenParams gp;
  gp.arrays = true;
  gp.inputs = true;
  gp.faults = true;
  ProgramGenerator gen(3, gp);
  for (int k = 0; k < 500; ++k) {
    Ast ast = parse(gen.next());
    std::string printed = pretty_print(ast);
    Ast again = parse(printed);
    EXPECT_TRUE(same_structure(ast, again)) << printed;
    EXPECT_EQ(pretty_print(again), printed);
  }
}

TEST(RoundTrip, HandWrittenConstructs) {
  const char* src = R"(
input N in 1..2;
shared int a[2 * N] = {1, -2, 3, 4};
shared int y = -5;
lock l;
thread 1 {
  local int t;
  local int u = -(a[0]) - -3;
  for (i = 0; i < N; i++) { critical(c) { a[i] = !(a[i] || i) % 2; } }
  atomic { y = (y - 1) - (2 - 3); }
  if (y < 0 && u >= 1 || t != 0) { t = choose(0..2); } else { yield; }
  while (t < 2) { t = t + 1; yield; }
  a[1] = choose(-1..1);
  barrier;
}
)";
  Ast ast = parse(src);
  EXPECT_TRUE(same_structure(ast, parse(pretty_print(ast)))) << pretty_print(ast);
}
