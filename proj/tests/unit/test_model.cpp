#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

#include "generator.hpp"
#include "helpers.hpp"
#include "mcrace/semantics.hpp"

using namespace mcrace;
using namespace mcrace::testing;

namespace {

const char* kTwoLocks = R"(
shared int x = 0;
lock l1, l2;
thread 1 { acquire(l1); x = 1; release(l1); }
thread 2 { acquire(l2); x = 2; release(l2); }
)";

const char* kBarrier = R"(
shared int x = 0;
thread 1 { x = 1; barrier; x = 2; }
thread 2 { barrier; }
)";

// Runs the first enabled statement of `tid` until it stands at `kind`.
GlobalState advance_to(const ProgramModel& m, GlobalState s, Tid tid, LocalKind kind) {
  for (int guard = 0; guard < 100 && m.kind_at(s, tid) != kind; ++guard) {
    auto en = enabled_for_thread(m, s, tid);
    if (en.empty()) break;
    s = execute(m, s, en.front()).state;
  }
  return s;
}

uint64_t splitmix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

TEST(Footprint, SortedAndUnique) {
  Footprint f;
  f.add_write(3);
  f.add_read(5);
  f.add_write(1);
  f.add_write(3);
  f.add_read(0);
  EXPECT_EQ(f.writes, (std::vector<Slot>{1, 3}));
  EXPECT_EQ(f.reads, (std::vector<Slot>{0, 5}));
  Footprint g;
  g.add_read(2);
  g.add_write(1);
  f.merge(g);
  EXPECT_EQ(f.writes, (std::vector<Slot>{1, 3}));
  EXPECT_EQ(f.reads, (std::vector<Slot>{0, 2, 5}));
  f.clear();
  EXPECT_TRUE(f.empty());
}

TEST(Footprint, ConflictNeedsAWrite) {
  Footprint a, b;
  a.add_read(0);
  b.add_read(0);
  EXPECT_FALSE(a.conflict_with(b));
  b.add_write(4);
  a.add_read(4);
  EXPECT_EQ(a.conflict_with(b), 4u);
  EXPECT_EQ(b.conflict_with(a), 4u);
  a.add_write(2);
  b.add_write(2);
  EXPECT_EQ(a.conflict_with(b), 2u);  // smallest slot wins
}

TEST(Footprint, Subset) {
  Footprint a, b;
  a.add_read(1);
  b.add_read(1);
  b.add_write(2);
  EXPECT_TRUE(a.subset_of(b));
  EXPECT_FALSE(b.subset_of(a));
  a.add_write(1);
  EXPECT_FALSE(a.subset_of(b));
}

TEST(Layout, DescribeScalarsAndArrays) {
  auto m = lower_text("shared int x; shared int a[3]; thread 1 { a[2] = x; }");
  ASSERT_EQ(m.layout.size, 4u);
  EXPECT_EQ(m.layout.describe(0), "x");
  EXPECT_EQ(m.layout.describe(3), "a[2]");
  for (Slot s = 0; s < m.layout.size; ++s) EXPECT_EQ(m.layout.slot(m.layout.location(s)), s);
}

TEST(IsNormal, NsyncAssignmentIsNormal) {
  auto m = lower_text("shared int x; thread 1 { x = 1; } thread 2 { x = 2; }");
  auto s = m.initial_state();
  EXPECT_TRUE(is_normal(m, s, 1));
  EXPECT_TRUE(is_normal(m, s, 2));
}

TEST(IsNormal, AcquireIsNotNormal) {
  auto m = lower_text(kTwoLocks);
  auto s = m.initial_state();
  ASSERT_EQ(m.kind_at(s, 1), LocalKind::Acquire);
  EXPECT_FALSE(is_normal(m, s, 1));
}

TEST(IsNormal, WaitingAtBarrierIsNotNormal) {
  auto m = lower_text(kBarrier);
  auto s = advance_to(m, m.initial_state(), 1, LocalKind::Barrier);
  ASSERT_EQ(m.kind_at(s, 1), LocalKind::Barrier);
  ASSERT_TRUE(s.waiting(1));
  EXPECT_TRUE(enabled_for_thread(m, s, 1).empty());
  EXPECT_FALSE(is_normal(m, s, 1));
}

TEST(IsNormal, TermIsNotNormal) {
  auto m = lower_text("thread 1 { }");
  EXPECT_FALSE(is_normal(m, m.initial_state(), 1));
}

TEST(Hash, InsertionOrderDoesNotMatter) {
  auto m = lower_text("shared int x; shared int y; lock l; thread 1 { x = 1; } thread 2 { y = 1; }");
  GlobalState a = m.initial_state(), b = m.initial_state();
  a.shared[0] = 7;
  a.shared[1] = 9;
  a.lock_owner[0] = 2;
  b.lock_owner[0] = 2;
  b.shared[1] = 9;
  b.shared[0] = 7;
  EXPECT_EQ(a, b);
  EXPECT_EQ(canonical_hash(a), canonical_hash(b));
}

TEST(Hash, WaitSetIsPartOfTheState) {
  auto m = lower_text(kBarrier);
  GlobalState a = m.initial_state(), b = a;
  b.wait_set = 1;
  EXPECT_NE(canonical_hash(a), canonical_hash(b));
}

TEST(Hash, ShapeIsPartOfTheState) {
  GlobalState a, b;
  a.shared = {0};
  b.locals = {0};
  EXPECT_NE(canonical_hash(a), canonical_hash(b));
}

TEST(Hash, NoCollisionsOnMillionDistinctStates) {
  std::mt19937_64 rng(12345);
  std::unordered_set<uint64_t> seen;
  seen.reserve(2'000'000);
  const uint64_t n = 1'000'000;
  uint64_t collisions = 0;
  for (uint64_t i = 0; i < n; ++i) {
    GlobalState s;
    s.pcs = {Pc(rng() % 8), Pc(rng() % 8), Pc(rng() % 8)};
    s.locals = {int64_t(rng() % 5), int64_t(rng() % 5)};
    // splitmix is a bijection, so the first slot makes every state distinct.
    s.shared = {int64_t(splitmix(i)), int64_t(rng() % 3), int64_t(rng() % 3)};
    s.lock_owner = {Tid(rng() % 4), Tid(rng() % 4)};
    s.wait_set = rng() % 8;
    if (!seen.insert(canonical_hash(s)).second) ++collisions;
  }
  EXPECT_EQ(collisions, 0u);
}

TEST(Hash, StableDigest) {
  // The digest is a fixed function of the fields; recomputing yields the same value.
  auto m = lower_text(kTwoLocks);
  auto s = m.initial_state();
  uint64_t h = canonical_hash(s);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(canonical_hash(GlobalState(s)), h);
}

TEST(Structure, InvariantsHoldOnGeneratedPrograms) {
  ProgramGenerator gen(7, GenParams{});
  for (int k = 0; k < 300; ++k) {
    auto src = gen.next();
    auto m = lower_text(src);
    ASSERT_NO_THROW(m.validate()) << src;
    for (const auto& t : m.threads) {
      for (Pc p = 0; p < t.locations.size(); ++p) {
        const auto& loc = t.locations[p];
        if (loc.kind == LocalKind::Acquire || loc.kind == LocalKind::Release) EXPECT_TRUE(t.in_r(p));
        if (loc.kind == LocalKind::Nsync) EXPECT_FALSE(loc.stmts.empty());
        if (loc.kind == LocalKind::Term) EXPECT_TRUE(loc.stmts.empty());
        for (StmtId id : loc.stmts) EXPECT_EQ(m.statement(id).tid, t.tid);
      }
      EXPECT_TRUE(find_cycle(t, true).empty()) << src;
    }
    for (StmtId id = 0; id < m.statements.size(); ++id) EXPECT_EQ(m.statements[id].id, id);
  }
}

TEST(Structure, StateInvariantsAlongExecutions) {
  ProgramGenerator gen(11, GenParams{});
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    auto m = lower_text(gen.next());
    for (const auto& s : sample_states(m, rng, 20)) {
      for (Tid owner : s.lock_owner) EXPECT_LE(owner, m.num_threads());
      for (Tid t = 1; t <= m.num_threads(); ++t)
        if (s.waiting(t)) EXPECT_EQ(m.kind_at(s, t), LocalKind::Barrier);
      EXPECT_NE(s.wait_set, m.all_threads_mask());
    }
  }
}

TEST(Structure, ValidateRejectsBrokenModels) {
  auto m = lower_text(kTwoLocks);
  auto bad = m;
  bad.threads[0].r_set[0] = false;  // an Acquire outside R
  EXPECT_THROW(bad.validate(), std::logic_error);
  bad = m;
  bad.threads[0].fault_pc = 1;  // not a Term location
  EXPECT_THROW(bad.validate(), std::logic_error);
}
