#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simgrade/corpus.hpp"
#include "simgrade/embed.hpp"
#include "simgrade/json_io.hpp"

namespace simgrade::stats {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool r2_defined = true;  // false when y has zero variance
  double rmse = 0.0;
  std::size_t n = 0;
};

// Closed-form least squares of y on x. Throws DimensionMismatch, ConstantX,
// InvalidArgument (fewer than two points).
OlsFit ols_fit(std::span<const double> x, std::span<const double> y);

struct BootstrapResult {
  double observed_diff = 0.0;
  double p_value = 1.0;
  std::size_t n_trials = 0;
};

// Two-sided pooled-resampling test of mean(a) - mean(b). Each trial draws
// |a| and |b| values with replacement from a u b; the p-value is
// (#{|diff*| >= |observed|} + 1) / (n_trials + 1). Trials use independent
// derived streams, so the result does not depend on evaluation order.
// Throws EmptySample / InvalidArgument.
BootstrapResult bootstrap_mean_diff(std::span<const double> a, std::span<const double> b, std::size_t n_trials,
                                    std::uint64_t seed);

// Tests the OLS slope of y on x against the null of no association by
// resampling x and y independently with replacement. observed_diff holds the
// observed slope; the p-value uses the same add-one rule.
BootstrapResult bootstrap_slope_test(std::span<const double> x, std::span<const double> y, std::size_t n_trials,
                                     std::uint64_t seed);

double mean(std::span<const double> v);

struct GraderError {
  std::string grader_id;
  std::size_t n_validations = 0;
  double mean_abs_pct_error = 0.0;
};

struct GraderErrorReport {
  std::vector<GraderError> graders;  // sorted by grader_id
  std::optional<OlsFit> fit;         // assigned% on true%; absent when true% is constant
  double rmse = 0.0;
  std::size_t n_entries = 0;
};

// Validation entries only. Throws NoValidationEntries.
GraderErrorReport grader_error_analysis(std::span<const corpus::GradingLogEntry> logs);

struct WindowPair {
  std::string grader_id;
  std::string submission_id;
  std::int64_t timestamp_ms = 0;
  double max_similarity = 0.0;
  double pct_error = 0.0;
};

struct WindowAnalysis {
  std::vector<WindowPair> pairs;
  std::optional<OlsFit> fit;  // absent with < 2 pairs or constant similarity
  std::size_t window = 3;
};

// For every validation entry with at least one predecessor in its grader's
// time-ordered log, pairs the max cosine similarity to the <= window
// preceding submissions with the entry's percentage error.
// Throws NoValidationEntries / MissingEmbedding.
WindowAnalysis window_similarity_analysis(std::span<const corpus::GradingLogEntry> logs,
                                          std::span<const embed::ProgramEmbedding> embeddings, std::size_t window,
                                          bool include_validation_history = true);

Json to_json(const OlsFit& fit);

}  // namespace simgrade::stats
