#include "simgrade/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include "simgrade/error.hpp"

namespace simgrade::corpus {

namespace fs = std::filesystem;

namespace {

std::string line_tag(std::size_t line) { return "line " + std::to_string(line); }

Submission parse_submission(const Json& r, std::size_t line) {
  Submission s;
  if (!r.contains("id") || !r["id"].is_string()) {
    throw Error(ErrorCode::MalformedRecord, line_tag(line) + ": missing string field 'id'");
  }
  if (!r.contains("problem_id") || !r["problem_id"].is_string()) {
    throw Error(ErrorCode::MalformedRecord, line_tag(line) + ": missing string field 'problem_id'");
  }
  if (!r.contains("source_text") || !r["source_text"].is_string()) {
    throw Error(ErrorCode::MalformedRecord, line_tag(line) + ": missing string field 'source_text'");
  }
  s.id = r["id"].get<std::string>();
  s.problem_id = r["problem_id"].get<std::string>();
  s.source_text = r["source_text"].get<std::string>();
  if (auto it = r.find("student_id"); it != r.end() && !it->is_null()) {
    s.student_id = it->get<std::string>();
  }
  if (s.source_text.empty()) {
    throw Error(ErrorCode::MalformedRecord, line_tag(line) + ": empty source_text");
  }
  return s;
}

template <typename T>
std::optional<T> optional_field(const Json& r, const char* key) {
  auto it = r.find(key);
  if (it == r.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::vector<std::string> SubmissionSet::ids() const {
  std::vector<std::string> out;
  out.reserve(submissions.size());
  for (const auto& s : submissions) out.push_back(s.id);
  return out;
}

SubmissionSet make_submission_set(std::vector<Submission> submissions) {
  SubmissionSet set;
  std::unordered_set<std::string> seen;
  for (const auto& s : submissions) {
    if (s.source_text.empty()) throw Error(ErrorCode::MalformedRecord, "empty source_text for " + s.id);
    if (!seen.insert(s.id).second) throw Error(ErrorCode::DuplicateId, s.id);
    if (set.problem_id.empty() && seen.size() == 1) {
      set.problem_id = s.problem_id;
    } else if (s.problem_id != set.problem_id) {
      throw Error(ErrorCode::MixedProblemIds, set.problem_id + " vs " + s.problem_id);
    }
  }
  set.submissions = std::move(submissions);
  return set;
}

SubmissionSet load_submissions(const fs::path& path) {
  std::vector<Submission> records;
  for_each_jsonl(path, [&](const Json& r, std::size_t line) { records.push_back(parse_submission(r, line)); });
  return make_submission_set(std::move(records));
}

Json to_json(const Submission& s) {
  Json j;
  j["id"] = s.id;
  j["problem_id"] = s.problem_id;
  j["student_id"] = s.student_id ? Json(*s.student_id) : Json(nullptr);
  j["source_text"] = s.source_text;
  return j;
}

void write_submissions(std::ostream& out, const SubmissionSet& set) {
  for (const auto& s : set.submissions) out << to_json(s).dump() << '\n';
}

void save_submissions(const fs::path& path, const SubmissionSet& set) {
  auto out = open_output(path);
  write_submissions(out, set);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

GradingLogEntry parse_grading_log_entry(const Json& r) {
  GradingLogEntry e;
  e.grader_id = r.at("grader_id").get<std::string>();
  e.submission_id = r.at("submission_id").get<std::string>();
  const auto& ts = r.at("timestamp_ms");
  if (!ts.is_number_integer()) throw Error(ErrorCode::MalformedRecord, "timestamp_ms must be an integer");
  e.timestamp_ms = ts.get<std::int64_t>();
  e.assigned_score = r.at("assigned_score").get<double>();
  e.max_score = r.at("max_score").get<double>();
  if (auto it = r.find("labels"); it != r.end() && !it->is_null()) {
    for (const auto& l : *it) e.labels.insert(l.get<std::string>());
  }
  e.duration_s = optional_field<double>(r, "duration_s");
  e.is_validation = optional_field<bool>(r, "is_validation").value_or(false);
  e.true_score = optional_field<double>(r, "true_score");

  if (!(e.max_score > 0.0)) throw Error(ErrorCode::ScoreOutOfRange, "max_score must be > 0");
  if (!(e.assigned_score >= 0.0 && e.assigned_score <= e.max_score)) {
    throw Error(ErrorCode::ScoreOutOfRange, "assigned_score " + std::to_string(e.assigned_score) +
                                                " outside [0, " + std::to_string(e.max_score) + "]");
  }
  if (e.true_score && !(*e.true_score >= 0.0 && *e.true_score <= e.max_score)) {
    throw Error(ErrorCode::ScoreOutOfRange, "true_score outside [0, max_score]");
  }
  if (e.duration_s && !(*e.duration_s >= 0.0)) throw Error(ErrorCode::MalformedRecord, "negative duration_s");
  if (e.is_validation && !e.true_score) {
    throw Error(ErrorCode::ValidationWithoutTrueScore, e.grader_id + "/" + e.submission_id);
  }
  return e;
}

Json to_json(const GradingLogEntry& e) {
  Json j;
  j["grader_id"] = e.grader_id;
  j["submission_id"] = e.submission_id;
  j["timestamp_ms"] = e.timestamp_ms;
  j["assigned_score"] = e.assigned_score;
  j["max_score"] = e.max_score;
  j["labels"] = Json::array();
  for (const auto& l : e.labels) j["labels"].push_back(l);
  j["duration_s"] = e.duration_s ? Json(*e.duration_s) : Json(nullptr);
  j["is_validation"] = e.is_validation;
  j["true_score"] = e.true_score ? Json(*e.true_score) : Json(nullptr);
  return j;
}

void sort_grading_logs(std::vector<GradingLogEntry>& logs) {
  std::stable_sort(logs.begin(), logs.end(), [](const GradingLogEntry& a, const GradingLogEntry& b) {
    if (a.grader_id != b.grader_id) return a.grader_id < b.grader_id;
    return a.timestamp_ms < b.timestamp_ms;
  });
}

std::vector<GradingLogEntry> load_grading_logs(const fs::path& path) {
  std::vector<GradingLogEntry> logs;
  for_each_jsonl(path, [&](const Json& r, std::size_t line) {
    try {
      logs.push_back(parse_grading_log_entry(r));
    } catch (const Error& e) {
      throw Error(e.code(), line_tag(line) + ": " + e.what());
    }
  });
  sort_grading_logs(logs);
  return logs;
}

void save_grading_logs(const fs::path& path, const std::vector<GradingLogEntry>& logs) {
  auto out = open_output(path);
  for (const auto& e : logs) out << to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

CorpusReport validate_corpus(const SubmissionSet& subs, const std::vector<GradingLogEntry>& logs) {
  CorpusReport report;
  std::unordered_set<std::string> known;
  for (const auto& s : subs.submissions) known.insert(s.id);
  std::unordered_set<std::string> logged;
  std::unordered_set<std::string> dangling_seen;
  for (const auto& e : logs) {
    ++report.entries_per_grader[e.grader_id];
    logged.insert(e.submission_id);
    if (!known.count(e.submission_id) && dangling_seen.insert(e.submission_id).second) {
      report.dangling_submission_ids.push_back(e.submission_id);
    }
  }
  for (const auto& s : subs.submissions) {
    if (!logged.count(s.id)) report.unlogged_submission_ids.push_back(s.id);
  }
  return report;
}

}  // namespace simgrade::corpus
