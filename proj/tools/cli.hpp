#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "simgrade/assign.hpp"
#include "simgrade/codeprep.hpp"
#include "simgrade/embed.hpp"
#include "simgrade/json_io.hpp"
#include "simgrade/simulate.hpp"

namespace simgrade::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 2, kDomain = 3, kIo = 4 };

// Every setting a command can consume. A config file fills it first, then
// command-line flags override individual fields.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  // synth
  std::string grammar;
  std::size_t n_programs = 444;
  std::string problem_id = "p1";

  // embed
  std::string submissions;
  codeprep::PrepOptions prep;
  std::size_t min_count = 5;
  embed::EmbedConfig embed;

  // assign / simulate / analyze / report
  std::vector<std::string> programs;
  std::string assignment_file;
  assign::AssignmentConfig assignment;
  std::string algorithm = "random";
  std::vector<std::string> algorithms = {"random", "cluster", "cluster_path", "snake", "petal_loop", "petal_path"};
  simulate::SimulationConfig simulation;
  std::size_t n_repetitions = 20;
  std::size_t bootstrap_trials = 100'000;
  std::string logs;
  std::string labels;
  std::size_t n_pairs = 100'000;
  std::size_t semantic_bootstrap_trials = 2'000;

  std::string out;
};

Json to_json(const RunConfig& cfg);
// Fields missing from `j` keep their current values.
void merge_json(RunConfig& cfg, const Json& j);

// Parses argv, runs one subcommand and returns its exit code. Output files
// are byte-identical for identical inputs and flags.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace simgrade::cli
