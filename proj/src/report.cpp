#include "mcrace/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mcrace/oracle.hpp"

namespace mcrace {

using ojson = nlohmann::ordered_json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Check: return "check";
    case Mode::Oracle: return "oracle";
    case Mode::Compare: return "compare";
    case Mode::Density: return "density";
    case Mode::Corpus: return "corpus";
  }
  return "check";
}

std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::Check, Mode::Oracle, Mode::Compare, Mode::Density, Mode::Corpus})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

namespace {

int64_t parse_int(std::string_view s) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

InputRange parse_range(const std::string& text) {
  std::string t = trim(text);
  auto dots = t.find("..");
  if (dots == std::string::npos) {
    int64_t v = parse_int(t);
    return {v, v};
  }
  InputRange r{parse_int(t.substr(0, dots)), parse_int(t.substr(dots + 2))};
  if (r.lo > r.hi) throw std::invalid_argument("empty range '" + t + "'");
  return r;
}

void RunConfig::validate() const {
  for (const auto& [name, r] : inputs)
    if (r.lo > r.hi) throw std::invalid_argument("empty range for input " + name);
  if (limits.max_states == 0) throw std::invalid_argument("--max-states must be positive");
  if (limits.max_depth == 0) throw std::invalid_argument("--max-depth must be positive");
  if (limits.time_limit_seconds < 0) throw std::invalid_argument("--time-limit must be positive");
  if (range_cap <= 0) throw std::invalid_argument("--range-cap must be positive");
}

int exit_code(const Report& report) {
  if (!report.errors.empty()) return 3;
  bool racy = false, unknown = false;
  for (const auto& inst : report.instances)
    if (inst.mismatch || (inst.density && !inst.density->ok())) return 4;
  for (const auto& inst : report.instances) {
    Verdict v = inst.primary().verdict;
    if (inst.oracle && inst.check && inst.oracle->verdict == Verdict::Unknown) v = Verdict::Unknown;
    racy |= v == Verdict::Racy;
    unknown |= v == Verdict::Unknown;
  }
  if (racy) return 1;
  if (unknown) return 2;
  return 0;
}

std::vector<InputBinding> input_sweep(const Ast& ast, const RunConfig& config) {
  std::vector<std::pair<std::string, InputRange>> ranges;
  for (const auto& in : ast.input_decls) {
    auto it = config.inputs.find(in.name);
    if (it != config.inputs.end()) {
      ranges.emplace_back(in.name, it->second);
    } else {
      int64_t hi = in.hi;
      if (hi - in.lo >= config.range_cap) hi = in.lo + config.range_cap - 1;
      ranges.emplace_back(in.name, InputRange{in.lo, hi});
    }
  }
  for (const auto& [name, r] : config.inputs) {
    bool declared = std::any_of(ast.input_decls.begin(), ast.input_decls.end(),
                                [&](const InputDecl& d) { return d.name == name; });
    if (!declared) throw std::invalid_argument("program declares no input named " + name);
  }
  std::sort(ranges.begin(), ranges.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<InputBinding> out{InputBinding{}};
  for (const auto& [name, r] : ranges) {
    std::vector<InputBinding> next;
    for (const auto& partial : out)
      for (int64_t v = r.lo;; ++v) {
        InputBinding b = partial;
        b[name] = v;
        next.push_back(std::move(b));
        if (v == r.hi) break;
      }
    out = std::move(next);
  }
  return out;
}

namespace {

std::string compare_finals(const RaceVerdict& a, const RaceVerdict& b) {
  if (a.final_states == b.final_states) return "";
  return "final states differ: checker " + std::to_string(a.final_states.size()) + ", oracle " +
         std::to_string(b.final_states.size());
}

}  // namespace

InstanceResult run_instance(const ProgramModel& program, const std::string& name, const InputBinding& inputs,
                            const RunConfig& config) {
  InstanceResult r;
  r.program = name;
  r.inputs = inputs;
  ExploreOptions explore{config.limits, config.policy, config.mode == Mode::Density};
  if (config.mode != Mode::Oracle) {
    CheckOptions opt;
    opt.explore = explore;
    r.check = check(program, opt);
  }
  if (config.mode == Mode::Oracle || config.mode == Mode::Compare) r.oracle = explore_full(program, explore);
  if (config.mode == Mode::Compare) {
    Verdict a = r.check->verdict, b = r.oracle->verdict;
    if (a != Verdict::Unknown && b != Verdict::Unknown) {
      if (a != b) {
        r.mismatch = true;
        r.mismatch_reason = std::string("verdicts differ: checker ") + to_string(a) + ", oracle " + to_string(b);
      } else if (a == Verdict::RaceFree) {
        r.mismatch_reason = compare_finals(*r.check, *r.oracle);
        r.mismatch = !r.mismatch_reason.empty();
      }
    }
  }
  if (config.mode == Mode::Density) {
    if (r.check->verdict == Verdict::Unknown || !r.check->graph)
      r.density = DensityReport{};
    else
      r.density = validate_density(program, *r.check->graph);
    r.check->graph.reset();
  }
  for (const RaceVerdict* v : {r.check ? &*r.check : nullptr, r.oracle ? &*r.oracle : nullptr}) {
    if (!v) continue;
    for (const auto& w : v->witnesses)
      for (StmtId id : w.path) {
        const Statement& st = program.statement(id);
        r.steps.emplace(id, "t" + std::to_string(st.tid) + " " + st.span.str() + "  " + st.text);
      }
  }
  return r;
}

Report run_source(const RunConfig& config, const std::string& name, const std::string& source) {
  Report report;
  report.mode = config.mode;
  std::vector<std::pair<InputBinding, ProgramModel>> models;
  try {
    config.validate();
    Ast ast = desugar(parse(source, name));
    for (auto& binding : input_sweep(ast, config)) {
      ProgramModel m = lower(ast, binding);
      models.emplace_back(std::move(binding), std::move(m));
    }
  } catch (const LoweringError& e) {
    std::string msg = name + ": " + e.what();
    for (const auto& s : e.spans()) msg += "\n  at " + s.str();
    report.errors.push_back(msg);
    return report;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    if (msg.rfind(name, 0) != 0) msg = name + ": " + msg;
    report.errors.push_back(msg);
    return report;
  }

  report.instances.resize(models.size());
  unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(models.size())));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k; (k = next++) < models.size();)
      report.instances[k] = run_instance(models[k].second, name, models[k].first, config);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

Report run(const RunConfig& config, const std::vector<std::string>& files) {
  Report report;
  report.mode = config.mode;
  if (files.empty()) report.errors.push_back("no input files");
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      report.errors.push_back(file + ": cannot open file");
      continue;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    Report one = run_source(config, file, ss.str());
    for (auto& e : one.errors) report.errors.push_back(std::move(e));
    for (auto& i : one.instances) report.instances.push_back(std::move(i));
  }
  return report;
}

namespace {

std::string kind_of(const Access& a) { return a.write ? "write" : "read"; }

ojson access_json(const Access& a) {
  return ojson{{"span", a.span.str()}, {"kind", kind_of(a)}, {"thread", a.tid}, {"statement", a.statement},
               {"text", a.text}};
}

ojson stats_json(const ExploreStats& s, bool stats) {
  ojson j{{"nodes", s.nodes}, {"edges", s.edges}, {"millis", nullptr}};
  if (stats) j["millis"] = std::round(s.millis * 1000) / 1000;
  return j;
}

ojson verdict_json(const RaceVerdict& v, bool stats) {
  ojson j;
  j["verdict"] = to_string(v.verdict);
  ojson ws = ojson::array();
  for (const auto& w : v.witnesses)
    ws.push_back(ojson{{"location", w.location},
                       {"thread_a", w.thread_a},
                       {"thread_b", w.thread_b},
                       {"access_a", access_json(w.access_a)},
                       {"access_b", access_json(w.access_b)},
                       {"path", w.path}});
  j["witnesses"] = std::move(ws);
  j["stats"] = stats_json(v.stats, stats);
  ojson fs = ojson::array();
  for (const auto& f : v.faults)
    fs.push_back(ojson{{"thread", f.tid}, {"statement", f.statement}, {"span", f.span.str()}, {"message", f.message}});
  j["faults"] = std::move(fs);
  if (!v.incomplete.empty()) j["limit"] = v.incomplete;
  return j;
}

ojson instance_json(const InstanceResult& r, Mode mode, bool stats) {
  ojson j;
  j["tool_version"] = kToolVersion;
  j["program"] = r.program;
  j["mode"] = to_string(mode);
  j["inputs"] = ojson::object();
  for (const auto& [k, v] : r.inputs) j["inputs"][k] = v;
  ojson v = verdict_json(r.primary(), stats);
  for (auto it = v.begin(); it != v.end(); ++it) j[it.key()] = *it;
  if (mode == Mode::Compare) {
    j["oracle"] = verdict_json(*r.oracle, stats);
    j["mismatch"] = r.mismatch;
    if (r.mismatch) j["mismatch_reason"] = r.mismatch_reason;
  }
  if (r.density) {
    ojson vs = ojson::array();
    for (const auto& v : r.density->violations)
      vs.push_back(ojson{{"node", v.node}, {"condition", v.condition}, {"message", v.message}});
    j["density"] = ojson{{"ok", r.density->ok()}, {"violations", std::move(vs)}};
  }
  return j;
}

std::string inputs_suffix(const InputBinding& inputs) {
  if (inputs.empty()) return "";
  std::string s = " [";
  bool first = true;
  for (const auto& [k, v] : inputs) {
    if (!first) s += ", ";
    first = false;
    s += k + "=" + std::to_string(v);
  }
  return s + "]";
}

void verdict_text(std::ostringstream& out, const RaceVerdict& v, const std::map<StmtId, std::string>& steps,
                  const std::string& indent, bool stats) {
  for (const auto& w : v.witnesses) {
    out << indent << "race on " << w.location << " between thread " << w.thread_a << " and thread " << w.thread_b
        << "\n";
    for (const Access* a : {&w.access_a, &w.access_b})
      out << indent << "  thread " << a->tid << " " << kind_of(*a) << " at " << a->span.str() << ": " << a->text
          << "\n";
    out << indent << "  path (" << w.path.size() << " steps):\n";
    for (size_t k = 0; k < w.path.size(); ++k) {
      auto it = steps.find(w.path[k]);
      out << indent << "    " << (k + 1) << ". #" << w.path[k];
      if (it != steps.end()) out << " " << it->second;
      out << "\n";
    }
  }
  for (const auto& f : v.faults)
    out << indent << "fault in thread " << f.tid << " at " << f.span.str() << ": " << f.message << "\n";
  if (!v.incomplete.empty()) out << indent << "stopped at limit: " << v.incomplete << "\n";
  out << indent << "nodes " << v.stats.nodes << ", edges " << v.stats.edges;
  if (stats) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v.stats.millis);
    out << ", " << buf << " ms";
  }
  out << "\n";
}

}  // namespace

std::string format_report(const Report& report, Format format, bool stats) {
  if (format == Format::Json) {
    ojson j;
    if (report.instances.size() == 1 && report.errors.empty()) {
      j = instance_json(report.instances[0], report.mode, stats);
    } else {
      j = ojson::array();
      for (const auto& r : report.instances) j.push_back(instance_json(r, report.mode, stats));
    }
    if (!report.errors.empty()) j = ojson{{"tool_version", kToolVersion}, {"errors", report.errors}, {"reports", j}};
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  for (const auto& e : report.errors) out << "error: " << e << "\n";
  for (const auto& r : report.instances) {
    const RaceVerdict& v = r.primary();
    out << r.program << inputs_suffix(r.inputs) << ": ";
    if (report.mode == Mode::Compare) {
      out << (r.mismatch ? "MISMATCH" : "agree") << "  checker " << to_string(r.check->verdict) << " | oracle "
          << to_string(r.oracle->verdict) << "\n";
      if (r.mismatch) out << "  " << r.mismatch_reason << "\n";
      out << "  checker:\n";
      verdict_text(out, *r.check, r.steps, "    ", stats);
      out << "  oracle:\n";
      verdict_text(out, *r.oracle, r.steps, "    ", stats);
      continue;
    }
    out << to_string(v.verdict) << "\n";
    verdict_text(out, v, r.steps, "  ", stats);
    if (r.density) {
      out << "  density: " << (r.density->ok() ? "ok" : "VIOLATED") << "\n";
      for (const auto& d : r.density->violations)
        out << "    node " << d.node << " condition " << d.condition << ": " << d.message << "\n";
    }
  }
  return out.str();
}

std::vector<CorpusEntry> parse_manifest(const std::string& text, const std::string& base_dir) {
  std::vector<CorpusEntry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, '\t');) cols.push_back(trim(c));
    auto fail = [&](const std::string& msg) {
      throw std::invalid_argument("manifest line " + std::to_string(lineno) + ": " + msg);
    };
    if (cols.size() < 2) fail("expected path<TAB>P|N[<TAB>key=value,...]");
    CorpusEntry e;
    std::filesystem::path p(cols[0]);
    e.path = p.is_absolute() || base_dir.empty() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    if (cols[1] == "P")
      e.expected = Verdict::Racy;
    else if (cols[1] == "N")
      e.expected = Verdict::RaceFree;
    else
      fail("expected verdict must be P or N, got '" + cols[1] + "'");
    if (cols.size() > 2 && !cols[2].empty()) {
      std::istringstream ks(cols[2]);
      for (std::string kv; std::getline(ks, kv, ',');) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) fail("expected key=value, got '" + kv + "'");
        std::string key = trim(kv.substr(0, eq)), value = trim(kv.substr(eq + 1));
        try {
          if (key == "threads")
            e.threads = static_cast<uint32_t>(parse_int(value));
          else
            e.inputs[key] = parse_range(value);
        } catch (const std::invalid_argument& ex) {
          fail(ex.what());
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

size_t CorpusSummary::passed() const {
  return static_cast<size_t>(std::count_if(rows.begin(), rows.end(), [](const CorpusRow& r) { return r.pass(); }));
}

CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const RunConfig& config) {
  CorpusSummary summary;
  for (const auto& e : entries) {
    CorpusRow row;
    row.file = e.path;
    row.expected = e.expected;
    RunConfig c = config;
    c.mode = Mode::Check;
    c.inputs = e.inputs;
    auto start = std::chrono::steady_clock::now();
    Report r = run(c, {e.path});
    row.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!r.errors.empty()) {
      row.error = r.errors.front();
    } else {
      bool racy = false, unknown = false;
      for (const auto& inst : r.instances) {
        racy |= inst.primary().verdict == Verdict::Racy;
        unknown |= inst.primary().verdict == Verdict::Unknown;
      }
      row.got = racy ? Verdict::Racy : unknown ? Verdict::Unknown : Verdict::RaceFree;
      if (e.threads) {
        // Thread count is a property of the source, independent of inputs.
        std::ifstream in(e.path);
        std::stringstream ss;
        ss << in.rdbuf();
        size_t n = parse(ss.str(), e.path).threads.size();
        if (n != *e.threads)
          row.error = "manifest says " + std::to_string(*e.threads) + " threads, program has " + std::to_string(n);
      }
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

std::string format_corpus(const CorpusSummary& summary, bool timings) {
  auto pn = [](Verdict v) -> std::string {
    switch (v) {
      case Verdict::Racy: return "P";
      case Verdict::RaceFree: return "N";
      case Verdict::Unknown: return "?";
    }
    return "?";
  };
  size_t width = 8;
  for (const auto& r : summary.rows) width = std::max(width, std::filesystem::path(r.file).filename().string().size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %10s %8s %4s  %s\n", static_cast<int>(width), "filename", "time(s)", "expected",
                "got", "result");
  out << buf;
  for (const auto& r : summary.rows) {
    std::string name = std::filesystem::path(r.file).filename().string();
    std::string time = "-";
    if (timings) {
      char tb[32];
      std::snprintf(tb, sizeof tb, "%.3f", r.millis / 1000);
      time = tb;
    }
    std::snprintf(buf, sizeof buf, "%-*s %10s %8s %4s  %s\n", static_cast<int>(width), name.c_str(), time.c_str(),
                  pn(r.expected).c_str(), pn(r.got).c_str(), r.pass() ? "ok" : "FAIL");
    out << buf;
  }
  for (const auto& r : summary.rows) {
    if (r.pass()) continue;
    out << "FAIL " << r.file;
    if (!r.error.empty()) out << ": " << r.error;
    out << "\n";
  }
  out << summary.passed() << "/" << summary.rows.size() << " expected\n";
  return out.str();
}

}  // namespace mcrace
