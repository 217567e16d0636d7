#include "mcrace/model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "mcrace/semantics.hpp"

namespace mcrace {

const char* to_string(LocalKind k) {
  switch (k) {
    case LocalKind::Acquire: return "acquire";
    case LocalKind::Release: return "release";
    case LocalKind::Barrier: return "barrier";
    case LocalKind::Nsync: return "nsync";
    case LocalKind::Term: return "term";
  }
  return "?";
}

std::optional<uint32_t> SharedLayout::find(const std::string& name) const {
  for (uint32_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return i;
  return std::nullopt;
}

MemLocation SharedLayout::location(Slot slot) const {
  auto it = std::upper_bound(vars.begin(), vars.end(), slot,
                             [](Slot s, const VarInfo& v) { return s < v.offset; });
  if (it == vars.begin()) throw std::out_of_range("slot outside shared layout");
  --it;
  MemLocation loc;
  loc.var = static_cast<uint32_t>(it - vars.begin());
  if (it->is_array) loc.index = slot - it->offset;
  return loc;
}

Slot SharedLayout::slot(const MemLocation& loc) const { return vars.at(loc.var).offset + loc.index.value_or(0); }

std::string SharedLayout::describe(Slot slot) const {
  MemLocation loc = location(slot);
  std::string out = vars[loc.var].name;
  if (loc.index) out += "[" + std::to_string(*loc.index) + "]";
  return out;
}

namespace {

void insert_sorted(std::vector<Slot>& v, Slot s) {
  auto it = std::lower_bound(v.begin(), v.end(), s);
  if (it == v.end() || *it != s) v.insert(it, s);
}

void merge_sorted(std::vector<Slot>& into, const std::vector<Slot>& from) {
  if (from.empty()) return;
  std::vector<Slot> out;
  out.reserve(into.size() + from.size());
  std::set_union(into.begin(), into.end(), from.begin(), from.end(), std::back_inserter(out));
  into = std::move(out);
}

std::optional<Slot> first_common(const std::vector<Slot>& a, const std::vector<Slot>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j)
      ++i;
    else if (*j < *i)
      ++j;
    else
      return *i;
  }
  return std::nullopt;
}

}  // namespace

void Footprint::add_read(Slot s) { insert_sorted(reads, s); }
void Footprint::add_write(Slot s) { insert_sorted(writes, s); }

void Footprint::merge(const Footprint& other) {
  merge_sorted(reads, other.reads);
  merge_sorted(writes, other.writes);
}

std::optional<Slot> Footprint::conflict_with(const Footprint& other) const {
  std::optional<Slot> best;
  auto consider = [&](std::optional<Slot> s) {
    if (s && (!best || *s < *best)) best = s;
  };
  consider(first_common(writes, other.writes));
  consider(first_common(writes, other.reads));
  consider(first_common(reads, other.writes));
  return best;
}

bool Footprint::subset_of(const Footprint& other) const {
  return std::includes(other.reads.begin(), other.reads.end(), reads.begin(), reads.end()) &&
         std::includes(other.writes.begin(), other.writes.end(), writes.begin(), writes.end());
}

namespace {

// FNV-1a over little-endian words, then a 64-bit finalizer.
class StableHasher {
 public:
  void word(uint64_t w) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (w >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  template <class T>
  void range(const std::vector<T>& v) {
    word(v.size());
    for (const auto& x : v) word(static_cast<uint64_t>(x));
  }
  uint64_t digest() const {
    uint64_t z = h_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace

uint64_t canonical_hash(const GlobalState& s) {
  StableHasher h;
  h.range(s.pcs);
  h.range(s.locals);
  h.range(s.shared);
  h.range(s.lock_owner);
  h.word(s.wait_set);
  return h.digest();
}

uint64_t ProgramModel::all_threads_mask() const {
  uint32_t n = num_threads();
  return n >= 64 ? ~uint64_t{0} : (uint64_t{1} << n) - 1;
}

GlobalState ProgramModel::initial_state() const {
  GlobalState s;
  s.pcs.reserve(threads.size());
  for (const auto& t : threads) s.pcs.push_back(t.initial);
  s.locals.assign(total_locals, 0);
  s.shared = initial_shared;
  s.lock_owner.assign(locks.size(), kNoThread);
  return s;
}

void ProgramModel::validate() const {
  auto fail = [](const std::string& m) { throw std::logic_error("invalid program model: " + m); };
  if (threads.empty() || threads.size() > kMaxThreads) fail("thread count");
  if (initial_shared.size() != layout.size) fail("shared store size");
  std::vector<bool> seen(statements.size(), false);
  for (size_t i = 0; i < statements.size(); ++i)
    if (statements[i].id != i) fail("statement ids are not dense");
  for (size_t ti = 0; ti < threads.size(); ++ti) {
    const ThreadModel& t = threads[ti];
    std::string where = "thread " + std::to_string(t.tid);
    if (t.tid != ti + 1) fail(where + ": tid out of order");
    if (t.r_set.size() != t.locations.size()) fail(where + ": R set size");
    if (t.initial >= t.locations.size()) fail(where + ": initial location");
    if (t.locations[t.initial].kind == LocalKind::Barrier) fail(where + ": initial location is a barrier");
    if (t.fault_pc >= t.locations.size() || t.locations[t.fault_pc].kind != LocalKind::Term)
      fail(where + ": fault location");
    for (Pc p = 0; p < t.locations.size(); ++p) {
      const Location& loc = t.locations[p];
      if ((loc.kind == LocalKind::Acquire || loc.kind == LocalKind::Release) && !t.r_set[p])
        fail(where + ": lock location outside R");
      if (loc.kind == LocalKind::Term) {
        if (!loc.stmts.empty()) fail(where + ": terminal location with statements");
        continue;
      }
      if (loc.stmts.empty()) fail(where + ": location without statements");
      if (loc.kind != LocalKind::Nsync) {
        if (loc.stmts.size() != 1) fail(where + ": sync location with several statements");
        if (loc.next >= t.locations.size()) fail(where + ": next out of range");
      }
      if ((loc.kind == LocalKind::Acquire || loc.kind == LocalKind::Release) && loc.lock >= locks.size())
        fail(where + ": undeclared lock");
      for (StmtId id : loc.stmts) {
        if (id >= statements.size() || seen[id]) fail(where + ": statement table");
        seen[id] = true;
        const Statement& st = statements[id];
        if (st.tid != t.tid) fail(where + ": statement owned by another thread");
        Statement::Kind expected = loc.kind == LocalKind::Acquire   ? Statement::Kind::Acquire
                                   : loc.kind == LocalKind::Release ? Statement::Kind::Release
                                   : loc.kind == LocalKind::Barrier ? Statement::Kind::Exit
                                                                    : Statement::Kind::Nsync;
        if (st.kind != expected) fail(where + ": statement kind does not match location");
        if (st.kind == Statement::Kind::Acquire || st.kind == Statement::Kind::Release)
          if (st.lock != loc.lock) fail(where + ": statement lock does not match location");
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) fail("orphan statement");
}

std::string ProgramModel::describe(const GlobalState& s) const {
  std::ostringstream os;
  os << "pcs=[";
  for (size_t i = 0; i < s.pcs.size(); ++i) os << (i ? "," : "") << s.pcs[i];
  os << "] shared={";
  bool first = true;
  for (const auto& v : layout.vars) {
    os << (first ? "" : ", ") << v.name << '=';
    first = false;
    if (v.is_array) {
      os << '[';
      for (uint32_t k = 0; k < v.length; ++k) os << (k ? "," : "") << s.shared[v.offset + k];
      os << ']';
    } else {
      os << s.shared[v.offset];
    }
  }
  os << "}";
  if (!s.locals.empty()) {
    os << " locals=[";
    for (size_t i = 0; i < s.locals.size(); ++i) os << (i ? "," : "") << s.locals[i];
    os << ']';
  }
  if (!locks.empty()) {
    os << " locks={";
    for (size_t l = 0; l < locks.size(); ++l) os << (l ? ", " : "") << locks[l] << '=' << s.lock_owner[l];
    os << '}';
  }
  if (s.wait_set) os << " wait=" << s.wait_set;
  return os.str();
}

bool is_normal(const ProgramModel& program, const GlobalState& state, Tid tid) {
  return !program.in_r(state, tid) && !enabled_for_thread(program, state, tid).empty();
}

}  // namespace mcrace
