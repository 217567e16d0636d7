#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcrace/frontend.hpp"
#include "mcrace/rdsg.hpp"
#include "mcrace/verdict.hpp"

namespace mcrace {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Mode : uint8_t { Check, Oracle, Compare, Density, Corpus };
enum class Format : uint8_t { Text, Json };

const char* to_string(Mode m);
std::optional<Mode> parse_mode(const std::string& s);

struct InputRange {
  int64_t lo = 0;
  int64_t hi = 0;
  bool operator==(const InputRange&) const = default;
};

// "7" or "1..10". Throws std::invalid_argument.
InputRange parse_range(const std::string& text);

struct RunConfig {
  Mode mode = Mode::Check;
  std::map<std::string, InputRange> inputs;
  ExploreLimits limits;
  WitnessPolicy policy = WitnessPolicy::First;
  Format format = Format::Text;
  bool stats = false;
  int64_t range_cap = 10;  // values per input when no override is given
  unsigned jobs = 1;

  // Throws std::invalid_argument on an empty range or non-positive limit.
  void validate() const;
};

struct InstanceResult {
  std::string program;
  InputBinding inputs;
  std::optional<RaceVerdict> check;
  std::optional<RaceVerdict> oracle;
  std::optional<DensityReport> density;
  bool mismatch = false;
  std::string mismatch_reason;
  std::map<StmtId, std::string> steps;  // descriptions of statements on witness paths

  // check's verdict, or the oracle's in oracle mode.
  const RaceVerdict& primary() const { return check ? *check : *oracle; }
};

struct Report {
  Mode mode = Mode::Check;
  std::vector<InstanceResult> instances;  // sorted by (program, inputs)
  std::vector<std::string> errors;        // parse, lowering and usage diagnostics
};

// 0 race-free, 1 racy, 2 unknown, 3 usage/parse error, 4 mismatch or
// density violation. Errors dominate, then mismatches, then races.
int exit_code(const Report& report);

// The cartesian product of input ranges for one program, in lexicographic
// order of (input name, value).
std::vector<InputBinding> input_sweep(const Ast& ast, const RunConfig& config);

InstanceResult run_instance(const ProgramModel& program, const std::string& name, const InputBinding& inputs,
                            const RunConfig& config);

Report run_source(const RunConfig& config, const std::string& name, const std::string& source);
Report run(const RunConfig& config, const std::vector<std::string>& files);

std::string format_report(const Report& report, Format format, bool stats = false);

struct CorpusEntry {
  std::string path;
  Verdict expected = Verdict::RaceFree;
  std::map<std::string, InputRange> inputs;
  std::optional<uint32_t> threads;
};

// One entry per line: path<TAB>P|N<TAB>key=value,... Blank lines and lines
// starting with '#' are skipped. Relative paths resolve against base_dir.
std::vector<CorpusEntry> parse_manifest(const std::string& text, const std::string& base_dir);

struct CorpusRow {
  std::string file;
  double millis = 0;
  Verdict expected = Verdict::RaceFree;
  Verdict got = Verdict::Unknown;
  std::string error;
  bool pass() const { return error.empty() && expected == got; }
};

struct CorpusSummary {
  std::vector<CorpusRow> rows;
  size_t passed() const;
  int exit_code() const { return passed() == rows.size() ? 0 : 1; }
};

CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const RunConfig& config);
std::string format_corpus(const CorpusSummary& summary, bool timings = true);

}  // namespace mcrace
