#include <gtest/gtest.h>

#include <random>

#include "generator.hpp"
#include "helpers.hpp"
#include "mcrace/semantics.hpp"

using namespace mcrace;
using namespace mcrace::testing;

namespace {

const char* kOneLock = R"(
shared int x = 0;
lock l;
thread 1 { acquire(l); x = 1; release(l); }
thread 2 { acquire(l); x = 2; release(l); }
)";

StmtId first(const ProgramModel& m, const GlobalState& s, Tid t) {
  auto en = enabled_for_thread(m, s, t);
  EXPECT_FALSE(en.empty());
  return en.front();
}

GlobalState run(const ProgramModel& m, GlobalState s, Tid t, int steps) {
  for (int k = 0; k < steps; ++k) s = execute(m, s, first(m, s, t)).state;
  return s;
}

}  // namespace

TEST(Enabled, AcquireOfFreeLock) {
  auto m = lower_text(kOneLock);
  auto s = m.initial_state();
  auto en = enabled_for_thread(m, s, 1);
  ASSERT_EQ(en.size(), 1u);
  EXPECT_EQ(m.statement(en[0]).kind, Statement::Kind::Acquire);
}

TEST(Enabled, AcquireOfHeldLock) {
  auto m = lower_text(kOneLock);
  auto s = run(m, m.initial_state(), 2, 1);
  ASSERT_EQ(s.lock_owner[0], 2u);
  EXPECT_TRUE(enabled_for_thread(m, s, 1).empty());
  EXPECT_FALSE(is_enabled(m, s, 0));
}

TEST(Enabled, ChooseGivesOneStatementPerValue) {
  auto m = lower_text("shared int x; thread 1 { } thread 2 { x = choose(1..3); }");
  auto en = enabled_for_thread(m, m.initial_state(), 2);
  EXPECT_EQ(en.size(), 3u);
}

TEST(Enabled, AllTerminatedIsEmpty) {
  auto m = lower_text("thread 1 { } thread 2 { }");
  EXPECT_TRUE(enabled(m, m.initial_state()).empty());
}

TEST(Enabled, AscendingThreadOrder) {
  auto m = lower_text("shared int x; shared int y; thread 1 { x = 1; } thread 2 { y = 1; }");
  auto en = enabled(m, m.initial_state());
  ASSERT_EQ(en.size(), 2u);
  EXPECT_EQ(m.statement(en[0]).tid, 1u);
  EXPECT_EQ(m.statement(en[1]).tid, 2u);
}

TEST(Enabled, BarrierReleasesEveryone) {
  auto m = lower_text("shared int x; thread 1 { barrier; x = 1; } thread 2 { barrier; }");
  auto s = m.initial_state();
  s = run(m, s, 2, 1);
  EXPECT_EQ(s.wait_set, 0b10u);
  EXPECT_TRUE(enabled_for_thread(m, s, 2).empty());
  s = run(m, s, 1, 1);
  EXPECT_EQ(s.wait_set, 0u);
  auto en = enabled(m, s);
  ASSERT_EQ(en.size(), 2u);
  for (StmtId id : en) EXPECT_EQ(m.statement(id).kind, Statement::Kind::Exit);
}

TEST(Execute, AcquireSetsOwner) {
  auto m = lower_text(kOneLock);
  auto r = execute(m, m.initial_state(), 0);
  EXPECT_EQ(r.state.lock_owner[0], 1u);
  EXPECT_TRUE(r.footprint.empty());
  auto back = run(m, r.state, 1, 2);
  EXPECT_EQ(back.lock_owner[0], kNoThread);
}

TEST(Execute, IncrementFootprint) {
  auto m = lower_text("shared int x = 4; thread 1 { x = x + 1; }");
  auto r = execute(m, m.initial_state(), 0);
  EXPECT_EQ(r.state.shared[0], 5);
  EXPECT_EQ(r.footprint.reads, (std::vector<Slot>{0}));
  EXPECT_EQ(r.footprint.writes, (std::vector<Slot>{0}));
}

TEST(Execute, IndexReadIsPartOfFootprint) {
  auto m = lower_text("shared int i = 1; shared int a[3]; thread 1 { a[i] = 7; }");
  auto r = execute(m, m.initial_state(), 0);
  EXPECT_EQ(r.state.shared[2], 7);
  EXPECT_EQ(r.footprint.reads, (std::vector<Slot>{0}));
  EXPECT_EQ(r.footprint.writes, (std::vector<Slot>{2}));
}

TEST(Execute, LocalsAreNotShared) {
  auto m = lower_text("shared int x; thread 1 { local int v = 3; x = v; }");
  auto s = m.initial_state();
  auto r = execute(m, s, first(m, s, 1));
  EXPECT_TRUE(r.footprint.empty());
  EXPECT_EQ(r.state.locals[0], 3);
}

TEST(Execute, BranchReadsCondition) {
  auto m = lower_text("shared int f; shared int x; thread 1 { if (f == 0) { x = 1; } else { x = 2; } }");
  auto r = execute(m, m.initial_state(), first(m, m.initial_state(), 1));
  EXPECT_EQ(r.footprint.reads, (std::vector<Slot>{0}));
  EXPECT_TRUE(r.footprint.writes.empty());
  auto r2 = execute(m, r.state, first(m, r.state, 1));
  EXPECT_EQ(r2.state.shared[1], 1);
}

TEST(Fault, DivisionByZeroStopsOnlyThatThread) {
  auto m = lower_text("shared int z; shared int x; thread 1 { x = 1 / z; x = 5; } thread 2 { z = 1; }");
  auto s = m.initial_state();
  auto r = execute(m, s, first(m, s, 1));
  ASSERT_TRUE(r.fault.has_value());
  EXPECT_EQ(r.fault->tid, 1u);
  EXPECT_EQ(r.state.pcs[0], m.thread(1).fault_pc);
  EXPECT_EQ(m.kind_at(r.state, 1), LocalKind::Term);
  EXPECT_EQ(r.footprint.reads, (std::vector<Slot>{0}));
  EXPECT_EQ(r.state.shared, s.shared);
  EXPECT_FALSE(enabled_for_thread(m, r.state, 2).empty());
}

TEST(Fault, OutOfBoundsIndex) {
  auto m = lower_text("shared int i = 5; shared int a[2]; thread 1 { a[i] = 1; }");
  auto r = execute(m, m.initial_state(), 0);
  ASSERT_TRUE(r.fault.has_value());
  EXPECT_NE(r.fault->message.find("bounds"), std::string::npos) << r.fault->message;
}

// Non-conflicting nsync statements of different threads commute and keep
// each other enabled.
TEST(Property, NsyncCommutation) {
  ProgramGenerator gen(101, GenParams{});
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int k = 0; k < 400; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 10)) {
      auto en = enabled(m, s);
      for (StmtId a : en)
        for (StmtId b : en) {
          const auto &sa = m.statement(a), &sb = m.statement(b);
          if (sa.tid >= sb.tid || !sa.is_nsync() || !sb.is_nsync()) continue;
          auto ra = execute(m, s, a), rb = execute(m, s, b);
          if (ra.footprint.conflict_with(rb.footprint)) continue;
          ASSERT_TRUE(is_enabled(m, ra.state, b));
          ASSERT_TRUE(is_enabled(m, rb.state, a));
          auto ab = execute(m, ra.state, b), ba = execute(m, rb.state, a);
          ASSERT_EQ(ab.state, ba.state) << m.describe(s);
          ASSERT_EQ(ab.footprint, rb.footprint);
          ASSERT_EQ(ba.footprint, ra.footprint);
          ++checked;
        }
    }
  }
  EXPECT_GT(checked, 1000);
}

// Without barriers, an nsync statement can neither enable nor disable a
// statement of another thread, nor be enabled or disabled by one.
TEST(Property, NsyncEnablementIsLocal) {
  GenParams p;
  p.barriers = false;
  ProgramGenerator gen(202, p);
  std::mt19937_64 rng(9);
  int checked = 0;
  for (int k = 0; k < 400; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 10)) {
      for (StmtId t2 : enabled(m, s)) {
        auto after = execute(m, s, t2).state;
        for (const auto& t1 : m.statements) {
          if (t1.tid == m.statement(t2).tid) continue;
          if (t1.is_nsync() || m.statement(t2).is_nsync()) {
            ASSERT_EQ(is_enabled(m, s, t1.id), is_enabled(m, after, t1.id));
            ++checked;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(Property, ExecuteIsDeterministic) {
  ProgramGenerator gen(303, GenParams{});
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 5))
      for (StmtId t : enabled(m, s)) {
        auto a = execute(m, s, t), b = execute(m, s, t);
        ASSERT_EQ(a.state, b.state);
        ASSERT_EQ(a.footprint, b.footprint);
        ASSERT_EQ(a.fault, b.fault);
      }
  }
}

TEST(Property, OnlyTheExecutingThreadMoves) {
  ProgramGenerator gen(404, GenParams{});
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 5))
      for (StmtId t : enabled(m, s)) {
        const auto& st = m.statement(t);
        auto r = execute(m, s, t);
        for (Tid o = 1; o <= m.num_threads(); ++o) {
          if (o == st.tid) continue;
          ASSERT_EQ(r.state.pcs[o - 1], s.pcs[o - 1]);
        }
        const auto& th = m.thread(st.tid);
        for (uint32_t v = 0; v < m.total_locals; ++v) {
          bool own = v >= th.local_offset && v < th.local_offset + th.local_names.size();
          if (!own) ASSERT_EQ(r.state.locals[v], s.locals[v]);
        }
        if (st.is_nsync() || st.kind == Statement::Kind::Exit) ASSERT_EQ(r.state.lock_owner, s.lock_owner);
        for (Slot w = 0; w < s.shared.size(); ++w)
          if (r.state.shared[w] != s.shared[w])
            ASSERT_TRUE(std::binary_search(r.footprint.writes.begin(), r.footprint.writes.end(), w));
      }
  }
}

// Once enabled, a barrier exit stays enabled under other threads' steps and
// does not change their enabledness.
TEST(Property, EnabledExitIsIndependent) {
  GenParams p;
  p.barriers = true;
  ProgramGenerator gen(505, p);
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int k = 0; k < 600; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 20))
      for (StmtId x : enabled(m, s)) {
        if (m.statement(x).kind != Statement::Kind::Exit) continue;
        auto after_x = execute(m, s, x).state;
        for (StmtId t : enabled(m, s)) {
          if (m.statement(t).tid == m.statement(x).tid) continue;
          ASSERT_TRUE(is_enabled(m, execute(m, s, t).state, x));
          ASSERT_TRUE(is_enabled(m, after_x, t));
          ++checked;
        }
      }
  }
  EXPECT_GT(checked, 100);
}
