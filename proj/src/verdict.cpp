#include "mcrace/verdict.hpp"

#include <limits>

namespace mcrace {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::RaceFree: return "race_free";
    case Verdict::Racy: return "racy";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<uint64_t> count_maximal_paths(const ExploredGraph& graph) {
  const size_t n = graph.nodes.size();
  if (n == 0) return 0;
  constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
  enum : uint8_t { White, Grey, Black };
  std::vector<uint8_t> color(n, White);
  std::vector<uint64_t> count(n, 0);
  std::vector<std::pair<uint32_t, size_t>> stack{{0, 0}};
  color[0] = Grey;
  while (!stack.empty()) {
    auto& [u, i] = stack.back();
    const auto& targets = graph.nodes[u].targets;
    if (i == targets.size()) {
      uint64_t total = 0;
      if (targets.empty()) total = 1;
      for (uint32_t v : targets) total = count[v] > kMax - total ? kMax : total + count[v];
      count[u] = total;
      color[u] = Black;
      stack.pop_back();
      continue;
    }
    uint32_t v = targets[i++];
    if (color[v] == Grey) return std::nullopt;
    if (color[v] == White) {
      color[v] = Grey;
      stack.emplace_back(v, 0);
    }
  }
  return count[0];
}

}  // namespace mcrace
