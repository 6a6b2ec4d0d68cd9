#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "simgrade/json_io.hpp"

namespace simgrade::corpus {

struct Submission {
  std::string id;
  std::string problem_id;
  std::optional<std::string> student_id;
  std::string source_text;

  friend bool operator==(const Submission&, const Submission&) = default;
};

struct GradingLogEntry {
  std::string grader_id;
  std::string submission_id;
  std::int64_t timestamp_ms = 0;
  double assigned_score = 0.0;
  double max_score = 1.0;
  std::set<std::string> labels;
  std::optional<double> duration_s;
  bool is_validation = false;
  std::optional<double> true_score;

  friend bool operator==(const GradingLogEntry&, const GradingLogEntry&) = default;
};

struct SubmissionSet {
  std::string problem_id;
  std::vector<Submission> submissions;

  std::size_t size() const noexcept { return submissions.size(); }
  bool empty() const noexcept { return submissions.empty(); }
  std::vector<std::string> ids() const;

  friend bool operator==(const SubmissionSet&, const SubmissionSet&) = default;
};

// Builds a set from records, enforcing unique ids, non-empty source and a
// single shared problem id.
SubmissionSet make_submission_set(std::vector<Submission> submissions);

// Reads JSON Lines. Throws MissingFile, MalformedRecord, DuplicateId,
// MixedProblemIds.
SubmissionSet load_submissions(const std::filesystem::path& path);
void write_submissions(std::ostream& out, const SubmissionSet& set);
void save_submissions(const std::filesystem::path& path, const SubmissionSet& set);

GradingLogEntry parse_grading_log_entry(const Json& record);
Json to_json(const GradingLogEntry& entry);
Json to_json(const Submission& submission);

// Entries come back stably sorted by (grader_id, timestamp_ms).
std::vector<GradingLogEntry> load_grading_logs(const std::filesystem::path& path);
void sort_grading_logs(std::vector<GradingLogEntry>& logs);
void save_grading_logs(const std::filesystem::path& path, const std::vector<GradingLogEntry>& logs);

struct CorpusReport {
  std::vector<std::string> dangling_submission_ids;  // in first-seen log order, deduplicated
  std::vector<std::string> unlogged_submission_ids;  // in submission order
  std::map<std::string, std::size_t> entries_per_grader;

  bool clean() const noexcept { return dangling_submission_ids.empty(); }
};

CorpusReport validate_corpus(const SubmissionSet& subs, const std::vector<GradingLogEntry>& logs);

}  // namespace simgrade::corpus
