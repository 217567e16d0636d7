#include <filesystem>
#include <fstream>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcrace/frontend.hpp"
#include "mcrace/oracle.hpp"
#include "mcrace/rdsg.hpp"
#include "mcrace/report.hpp"

namespace py = pybind11;
using namespace mcrace;

namespace {

py::dict span_dict(const SourceSpan& s) {
  py::dict d;
  d["file"] = s.file;
  d["line"] = s.line;
  d["column"] = s.column;
  d["length"] = s.length;
  return d;
}

py::dict access_dict(const Access& a) {
  py::dict d;
  d["thread"] = a.tid;
  d["statement"] = a.statement;
  d["kind"] = a.write ? "write" : "read";
  d["text"] = a.text;
  d["span"] = span_dict(a.span);
  return d;
}

py::dict state_dict(const ProgramModel& m, const GlobalState& s) {
  py::dict shared;
  for (Slot k = 0; k < m.layout.size; ++k) shared[py::str(m.layout.describe(k))] = s.shared[k];
  py::dict d;
  d["pcs"] = s.pcs;
  d["shared"] = shared;
  d["locals"] = s.locals;
  d["lock_owner"] = s.lock_owner;
  d["wait_set"] = s.wait_set;
  return d;
}

py::dict verdict_dict(const ProgramModel& m, const RaceVerdict& v) {
  py::list witnesses;
  for (const auto& w : v.witnesses) {
    py::dict d;
    d["location"] = w.location;
    d["thread_a"] = w.thread_a;
    d["thread_b"] = w.thread_b;
    d["access_a"] = access_dict(w.access_a);
    d["access_b"] = access_dict(w.access_b);
    d["path"] = w.path;
    witnesses.append(d);
  }
  py::list faults;
  for (const auto& f : v.faults) {
    py::dict d;
    d["thread"] = f.tid;
    d["statement"] = f.statement;
    d["message"] = f.message;
    d["span"] = span_dict(f.span);
    faults.append(d);
  }
  py::list finals;
  for (const auto& s : v.final_states) finals.append(state_dict(m, s));
  py::dict stats;
  stats["nodes"] = v.stats.nodes;
  stats["edges"] = v.stats.edges;
  stats["millis"] = v.stats.millis;
  py::dict d;
  d["verdict"] = to_string(v.verdict);
  d["witnesses"] = witnesses;
  d["faults"] = faults;
  d["final_states"] = finals;
  d["stats"] = stats;
  d["incomplete"] = v.incomplete;
  return d;
}

ExploreOptions explore_options(uint64_t max_states, uint64_t max_depth, double time_limit, bool all_races,
                               bool record_graph = false) {
  ExploreOptions o;
  o.limits.max_states = max_states;
  o.limits.max_depth = max_depth;
  o.limits.time_limit_seconds = time_limit;
  o.policy = all_races ? WitnessPolicy::All : WitnessPolicy::First;
  o.record_graph = record_graph;
  return o;
}

class Program {
 public:
  Program(const std::string& source, const InputBinding& inputs, const std::string& name)
      : model_(lower(parse(source, name), inputs)) {}

  uint32_t num_threads() const { return model_.num_threads(); }
  std::vector<std::string> statements() const {
    std::vector<std::string> out;
    for (const auto& s : model_.statements) out.push_back(s.text);
    return out;
  }
  std::vector<std::string> locks() const { return model_.locks; }
  std::vector<std::string> shared() const {
    std::vector<std::string> out;
    for (Slot k = 0; k < model_.layout.size; ++k) out.push_back(model_.layout.describe(k));
    return out;
  }
  std::vector<std::vector<std::string>> location_kinds() const {
    std::vector<std::vector<std::string>> out;
    for (const auto& t : model_.threads) {
      out.emplace_back();
      for (const auto& l : t.locations) out.back().push_back(to_string(l.kind));
    }
    return out;
  }
  py::dict initial_state() const { return state_dict(model_, model_.initial_state()); }

  py::dict check(uint64_t max_states, uint64_t max_depth, double time_limit, bool all_races) const {
    CheckOptions o;
    o.explore = explore_options(max_states, max_depth, time_limit, all_races);
    RaceVerdict v;
    {
      py::gil_scoped_release nogil;
      v = mcrace::check(model_, o);
    }
    return verdict_dict(model_, v);
  }

  py::dict explore_full(uint64_t max_states, uint64_t max_depth, double time_limit, bool all_races) const {
    auto o = explore_options(max_states, max_depth, time_limit, all_races);
    RaceVerdict v;
    {
      py::gil_scoped_release nogil;
      v = mcrace::explore_full(model_, o);
    }
    return verdict_dict(model_, v);
  }

  py::dict density(uint64_t max_states) const {
    CheckOptions o;
    o.explore = explore_options(max_states, 100'000, 0, true, true);
    auto v = mcrace::check(model_, o);
    py::dict d;
    d["verdict"] = to_string(v.verdict);
    py::list violations;
    if (v.graph)
      for (const auto& viol : validate_density(model_, *v.graph).violations) {
        py::dict e;
        e["node"] = viol.node;
        e["condition"] = viol.condition;
        e["message"] = viol.message;
        violations.append(e);
      }
    d["ok"] = v.graph.has_value() && violations.empty();
    d["violations"] = violations;
    d["nodes"] = v.stats.nodes;
    return d;
  }

 private:
  ProgramModel model_;
};

std::pair<int, std::string> run_text(const std::string& mode, const std::string& source, const std::string& name,
                                     const std::map<std::string, std::pair<int64_t, int64_t>>& inputs,
                                     uint64_t max_states, uint64_t max_depth, double time_limit, bool all_races,
                                     bool json, bool stats) {
  auto m = parse_mode(mode);
  if (!m || *m == Mode::Corpus) throw std::invalid_argument("unsupported mode: " + mode);
  RunConfig cfg;
  cfg.mode = *m;
  for (const auto& [k, r] : inputs) cfg.inputs[k] = {r.first, r.second};
  cfg.limits = explore_options(max_states, max_depth, time_limit, all_races).limits;
  cfg.policy = all_races ? WitnessPolicy::All : WitnessPolicy::First;
  cfg.stats = stats;
  cfg.validate();
  auto format = json ? Format::Json : Format::Text;
  Report report;
  {
    py::gil_scoped_release nogil;
    report = run_source(cfg, name, source);
  }
  return {exit_code(report), format_report(report, format, stats)};
}

std::pair<int, std::string> corpus_text(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::invalid_argument("cannot open " + manifest_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = std::filesystem::path(manifest_path).parent_path().string();
  auto summary = run_corpus(parse_manifest(ss.str(), base.empty() ? "." : base), RunConfig{});
  return {summary.exit_code(), format_corpus(summary)};
}

}  // namespace

PYBIND11_MODULE(_mcrace, m) {
  m.doc() = "Data race model checker";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<LoweringError>(m, "LoweringError", PyExc_ValueError);

  constexpr uint64_t kStates = 5'000'000, kDepth = 100'000;

  py::class_<Program>(m, "Program")
      .def(py::init<const std::string&, const InputBinding&, const std::string&>(), py::arg("source"),
           py::arg("inputs") = InputBinding{}, py::arg("name") = "<input>")
      .def_property_readonly("num_threads", &Program::num_threads)
      .def_property_readonly("statements", &Program::statements)
      .def_property_readonly("locks", &Program::locks)
      .def_property_readonly("shared", &Program::shared)
      .def_property_readonly("location_kinds", &Program::location_kinds)
      .def("initial_state", &Program::initial_state)
      .def("check", &Program::check, py::arg("max_states") = kStates, py::arg("max_depth") = kDepth,
           py::arg("time_limit") = 0.0, py::arg("all_races") = false)
      .def("explore_full", &Program::explore_full, py::arg("max_states") = kStates, py::arg("max_depth") = kDepth,
           py::arg("time_limit") = 0.0, py::arg("all_races") = false)
      .def("density", &Program::density, py::arg("max_states") = kStates);

  m.def("run", &run_text, py::arg("mode"), py::arg("source"), py::arg("name") = "<input>",
        py::arg("inputs") = std::map<std::string, std::pair<int64_t, int64_t>>{}, py::arg("max_states") = kStates,
        py::arg("max_depth") = kDepth, py::arg("time_limit") = 0.0, py::arg("all_races") = false,
        py::arg("json") = true, py::arg("stats") = false,
        "Runs one mode on program text; returns (exit_code, rendered report).");
  m.def("run_corpus", &corpus_text, py::arg("manifest"), "Runs a corpus manifest; returns (exit_code, table).");
  m.def("pretty_print", [](const std::string& source) { return pretty_print(parse(source)); }, py::arg("source"));
}
