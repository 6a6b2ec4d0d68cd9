#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simgrade/assign.hpp"
#include "simgrade/embed.hpp"
#include "simgrade/json_io.hpp"

namespace simgrade::simulate {

// Linear map from window max-similarity to percentage grading error. The
// defaults pass through (1.0, 2.7%) and (0.85, 10.2%).
struct ErrorModel {
  double intercept = 52.7;
  double slope = -50.0;
  double min_error = 0.0;
  double max_error = 100.0;
};

struct SimulationConfig {
  std::size_t window = 3;
  double cold_start_similarity = 0.80;
  bool validation_history = true;  // validation entries count as window history
  ErrorModel error_model;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulationResult {
  assign::Algorithm algorithm = assign::Algorithm::Random;
  std::vector<std::vector<double>> errors;  // [grader][position], percent
  double mean_error = 0.0;
  double validation_distance = 0.0;
  std::size_t graders_without_regular = 0;  // skipped by validation_distance
};

// Max cosine between queue[position] and its <= window predecessors;
// cold_start_similarity at position 0. `queue` holds row indices of `sim`.
double window_max_similarity(std::span<const std::size_t> queue, std::size_t position,
                             const embed::SimilarityMatrix& sim, const SimulationConfig& cfg);

double predict_error(double max_sim, const ErrorModel& model);

// Every position of every queue is scored. Empty petals can leave a grader
// with validations only; such graders are skipped by the validation distance.
// Throws UnknownSubmissionInQueue.
SimulationResult simulate_session(const assign::Assignment& assignment, const embed::SimilarityMatrix& sim,
                                  const SimulationConfig& cfg);

// Mean over graders of the mean cosine distance from each validation to the
// nearest regular submission in the same queue. A grader holding validations
// but no regular submissions throws GraderHasNoRegularSubmissions unless
// `skip_without_regular` is set, in which case that grader is left out of the
// mean and counted in `*skipped`. Also throws UnknownSubmissionInQueue.
double validation_distance(const assign::Assignment& assignment, const embed::SimilarityMatrix& sim,
                           bool skip_without_regular = false, std::size_t* skipped = nullptr);

struct Problem {
  std::string problem_id;
  std::vector<embed::ProgramEmbedding> embeddings;
};

struct ComparisonConfig {
  assign::AssignmentConfig assignment;  // algorithm and seed are overridden per run
  SimulationConfig simulation;
  std::size_t n_repetitions = 20;
  std::size_t bootstrap_trials = 100'000;
  std::size_t threads = 1;
  bool keep_position_errors = true;
};

struct SessionRecord {
  std::string problem_id;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double mean_error = 0.0;
  double validation_distance = 0.0;
  std::size_t graders_without_regular = 0;
  std::vector<std::vector<double>> errors;  // empty unless keep_position_errors
};

struct AlgorithmSummary {
  assign::Algorithm algorithm = assign::Algorithm::Random;
  double mean_error = 0.0;           // over every scored position of every session
  double validation_distance = 0.0;  // over sessions
  std::optional<double> p_vs_random;  // bootstrap on per-session mean errors
  std::size_t n_reps = 0;
  std::vector<SessionRecord> sessions;
};

struct ComparisonReport {
  std::vector<AlgorithmSummary> rows;  // in requested order
};

// Session seeds depend only on (base seed, problem, repetition), so every
// algorithm sees the same validation draws.
std::uint64_t session_seed(std::uint64_t base, std::size_t problem, std::size_t repetition);

ComparisonReport compare_algorithms(std::span<const Problem> problems, std::span<const assign::Algorithm> algorithms,
                                    const ComparisonConfig& cfg);

std::string to_csv(const ComparisonReport& report);
Json to_json(const ComparisonReport& report, bool include_positions = true);
Json to_json(const SimulationResult& result);

}  // namespace simgrade::simulate
