#include <fstream>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mcrace/report.hpp"

using namespace mcrace;

int main(int argc, char** argv) {
  CLI::App app{"mcrace: data race checker for the .mtp concurrency language"};
  app.set_version_flag("--version", kToolVersion);

  std::string mode_name;
  std::vector<std::string> files;
  std::vector<std::string> input_flags;
  RunConfig config;
  bool json = false;
  bool all_races = false;

  app.add_option("mode", mode_name, "check | oracle | compare | density | corpus")
      ->required()
      ->check(CLI::IsMember({"check", "oracle", "compare", "density", "corpus"}));
  app.add_option("files", files, "program files (.mtp), or one manifest in corpus mode")->required();
  app.add_option("--input", input_flags, "name=V or name=LO..HI; repeatable");
  app.add_option("--max-states", config.limits.max_states, "state limit")->check(CLI::PositiveNumber);
  app.add_option("--max-depth", config.limits.max_depth, "depth limit")->check(CLI::PositiveNumber);
  app.add_option("--time-limit", config.limits.time_limit_seconds, "wall-time limit in seconds per instance")
      ->check(CLI::PositiveNumber);
  app.add_flag("--all-races", all_races, "keep exploring after the first race");
  app.add_flag("--json", json, "machine-readable report");
  app.add_flag("--stats", config.stats, "include timings");
  app.add_option("--range-cap", config.range_cap, "values per input when no --input is given")
      ->check(CLI::PositiveNumber);
  app.add_option("--jobs,-j", config.jobs, "parallel instances")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  config.mode = *parse_mode(mode_name);
  config.policy = all_races ? WitnessPolicy::All : WitnessPolicy::First;
  config.format = json ? Format::Json : Format::Text;
  try {
    for (const auto& flag : input_flags) {
      auto eq = flag.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--input expects name=V or name=LO..HI");
      config.inputs[flag.substr(0, eq)] = parse_range(flag.substr(eq + 1));
    }
    config.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "mcrace: " << e.what() << "\n";
    return 3;
  }

  if (config.mode == Mode::Corpus) {
    if (files.size() != 1) {
      std::cerr << "mcrace: corpus mode takes exactly one manifest\n";
      return 3;
    }
    std::ifstream in(files[0]);
    if (!in) {
      std::cerr << "mcrace: cannot open " << files[0] << "\n";
      return 3;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      auto entries = parse_manifest(ss.str(), std::filesystem::path(files[0]).parent_path().string());
      CorpusSummary summary = run_corpus(entries, config);
      std::cout << format_corpus(summary);
      return summary.exit_code();
    } catch (const std::exception& e) {
      std::cerr << "mcrace: " << e.what() << "\n";
      return 3;
    }
  }

  Report report = run(config, files);
  for (const auto& e : report.errors) std::cerr << "mcrace: " << e << "\n";
  if (config.format == Format::Json || !report.instances.empty()) {
    Report shown = report;
    if (config.format == Format::Text) shown.errors.clear();
    std::cout << format_report(shown, config.format, config.stats);
  }
  return exit_code(report);
}
