#include "simgrade/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "simgrade/error.hpp"
#include "simgrade/random.hpp"
#include "simgrade/stats.hpp"

namespace simgrade::simulate {

namespace {

std::vector<std::vector<std::size_t>> queue_rows(const assign::Assignment& a, const embed::SimilarityMatrix& sim) {
  std::vector<std::vector<std::size_t>> rows(a.graders.size());
  for (std::size_t g = 0; g < a.graders.size(); ++g) {
    for (const auto& e : a.graders[g].entries) {
      const auto r = sim.index_of(e.id);
      if (r < 0) throw Error(ErrorCode::UnknownSubmissionInQueue, e.id);
      rows[g].push_back(static_cast<std::size_t>(r));
    }
  }
  return rows;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

void SimulationConfig::validate() const {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
  if (!(cold_start_similarity >= -1.0 && cold_start_similarity <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cold_start_similarity must lie in [-1, 1]");
  }
  if (!(error_model.min_error >= 0.0 && error_model.min_error <= error_model.max_error)) {
    throw Error(ErrorCode::InvalidArgument, "error model needs 0 <= min_error <= max_error");
  }
}

double window_max_similarity(std::span<const std::size_t> queue, std::size_t position,
                             const embed::SimilarityMatrix& sim, const SimulationConfig& cfg) {
  if (position >= queue.size()) throw Error(ErrorCode::InvalidArgument, "position past end of queue");
  if (position == 0) return cfg.cold_start_similarity;
  const std::size_t from = position > cfg.window ? position - cfg.window : 0;
  double best = -1.0;
  for (std::size_t p = from; p < position; ++p) best = std::max(best, sim.at(queue[position], queue[p]));
  return best;
}

double predict_error(double max_sim, const ErrorModel& model) {
  return std::clamp(model.intercept + model.slope * max_sim, model.min_error, model.max_error);
}

SimulationResult simulate_session(const assign::Assignment& assignment, const embed::SimilarityMatrix& sim,
                                  const SimulationConfig& cfg) {
  cfg.validate();
  const auto rows = queue_rows(assignment, sim);
  SimulationResult res;
  res.algorithm = assignment.algorithm;
  res.errors.resize(rows.size());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& entries = assignment.graders[g].entries;
    // History holds the rows a grader has seen that count toward the window.
    std::vector<std::size_t> history;
    history.reserve(rows[g].size() + 1);
    for (std::size_t p = 0; p < rows[g].size(); ++p) {
      history.push_back(rows[g][p]);
      const double s = window_max_similarity(history, history.size() - 1, sim, cfg);
      if (entries[p].validation && !cfg.validation_history) history.pop_back();
      const double err = predict_error(s, cfg.error_model);
      res.errors[g].push_back(err);
      total += err;
      ++count;
    }
  }
  res.mean_error = count ? total / static_cast<double>(count) : 0.0;
  res.validation_distance = validation_distance(assignment, sim, true, &res.graders_without_regular);
  return res;
}

double validation_distance(const assign::Assignment& assignment, const embed::SimilarityMatrix& sim,
                           bool skip_without_regular, std::size_t* skipped) {
  if (skipped) *skipped = 0;
  const auto rows = queue_rows(assignment, sim);
  double sum_over_graders = 0.0;
  std::size_t graders_with_validations = 0;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& entries = assignment.graders[g].entries;
    std::vector<std::size_t> regular, validation;
    for (std::size_t p = 0; p < entries.size(); ++p) (entries[p].validation ? validation : regular).push_back(rows[g][p]);
    if (validation.empty()) continue;
    if (regular.empty()) {
      if (!skip_without_regular) throw Error(ErrorCode::GraderHasNoRegularSubmissions, "grader " + std::to_string(g));
      if (skipped) ++*skipped;
      continue;
    }
    double acc = 0.0;
    for (auto v : validation) {
      double best = -1.0;
      for (auto r : regular) best = std::max(best, sim.at(v, r));
      acc += 1.0 - best;
    }
    sum_over_graders += acc / static_cast<double>(validation.size());
    ++graders_with_validations;
  }
  return graders_with_validations ? sum_over_graders / static_cast<double>(graders_with_validations) : 0.0;
}

std::uint64_t session_seed(std::uint64_t base, std::size_t problem, std::size_t repetition) {
  return derive_seed(base, {0x5e55, static_cast<std::uint64_t>(problem), static_cast<std::uint64_t>(repetition)});
}

ComparisonReport compare_algorithms(std::span<const Problem> problems, std::span<const assign::Algorithm> algorithms,
                                    const ComparisonConfig& cfg) {
  if (cfg.n_repetitions == 0) throw Error(ErrorCode::InvalidArgument, "n_repetitions must be >= 1");
  cfg.simulation.validate();

  std::vector<embed::SimilarityMatrix> sims;
  sims.reserve(problems.size());
  for (const auto& p : problems) sims.push_back(embed::pairwise_similarity(p.embeddings));

  const std::size_t per_alg = problems.size() * cfg.n_repetitions;
  const std::size_t n_tasks = algorithms.size() * per_alg;
  std::vector<SessionRecord> records(n_tasks);

  auto run_task = [&](std::size_t t) {
    const std::size_t a = t / per_alg;
    const std::size_t rest = t % per_alg;
    const std::size_t p = rest / cfg.n_repetitions;
    const std::size_t r = rest % cfg.n_repetitions;
    auto acfg = cfg.assignment;
    acfg.algorithm = algorithms[a];
    acfg.seed = session_seed(cfg.assignment.seed, p, r);
    const auto assignment = assign::build_assignment(problems[p].embeddings, sims[p], acfg);
    const auto result = simulate_session(assignment, sims[p], cfg.simulation);
    auto& rec = records[t];
    rec.problem_id = problems[p].problem_id;
    rec.repetition = r;
    rec.seed = acfg.seed;
    rec.mean_error = result.mean_error;
    rec.validation_distance = result.validation_distance;
    rec.graders_without_regular = result.graders_without_regular;
    rec.errors = result.errors;
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, n_tasks));
  if (threads == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
        } catch (...) {
          failures[w] = std::current_exception();
          next = n_tasks;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }

  ComparisonReport report;
  std::optional<std::size_t> random_row;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    AlgorithmSummary row;
    row.algorithm = algorithms[a];
    row.n_reps = cfg.n_repetitions;
    double total = 0.0, dist = 0.0;
    std::size_t positions = 0;
    for (std::size_t i = 0; i < per_alg; ++i) {
      auto& rec = records[a * per_alg + i];
      for (const auto& q : rec.errors) {
        for (double e : q) total += e;
        positions += q.size();
      }
      dist += rec.validation_distance;
      if (!cfg.keep_position_errors) rec.errors.clear();
      row.sessions.push_back(std::move(rec));
    }
    row.mean_error = positions ? total / static_cast<double>(positions) : 0.0;
    row.validation_distance = per_alg ? dist / static_cast<double>(per_alg) : 0.0;
    if (algorithms[a] == assign::Algorithm::Random && !random_row) random_row = a;
    report.rows.push_back(std::move(row));
  }

  if (random_row) {
    std::vector<double> baseline;
    for (const auto& s : report.rows[*random_row].sessions) baseline.push_back(s.mean_error);
    for (std::size_t a = 0; a < report.rows.size(); ++a) {
      if (a == *random_row) continue;
      std::vector<double> sample;
      for (const auto& s : report.rows[a].sessions) sample.push_back(s.mean_error);
      const auto boot = stats::bootstrap_mean_diff(baseline, sample, cfg.bootstrap_trials,
                                                   derive_seed(cfg.assignment.seed, {0xb007, a}));
      report.rows[a].p_vs_random = boot.p_value;
    }
  }
  return report;
}

std::string to_csv(const ComparisonReport& report) {
  std::ostringstream os;
  os << "algorithm,mean_error_pct,validation_distance,p_vs_random,n_reps\n";
  for (const auto& row : report.rows) {
    os << assign::to_string(row.algorithm) << ',' << format_number(row.mean_error) << ','
       << format_number(row.validation_distance) << ',' << (row.p_vs_random ? format_number(*row.p_vs_random) : "")
       << ',' << row.n_reps << '\n';
  }
  return os.str();
}

Json to_json(const ComparisonReport& report, bool include_positions) {
  Json j;
  j["conventions"] = {
      {"mean_error_pct", "mean over every scored queue position across problems, repetitions and graders"},
      {"validation_distance", "mean over sessions of the per-grader mean cosine distance to the nearest regular submission"},
      {"p_vs_random", "two-sided pooled bootstrap on per-session mean errors against the random baseline"},
  };
  j["rows"] = Json::array();
  for (const auto& row : report.rows) {
    Json rj;
    rj["algorithm"] = std::string(assign::to_string(row.algorithm));
    rj["mean_error_pct"] = row.mean_error;
    rj["validation_distance"] = row.validation_distance;
    rj["p_vs_random"] = row.p_vs_random ? Json(*row.p_vs_random) : Json(nullptr);
    rj["n_reps"] = row.n_reps;
    rj["sessions"] = Json::array();
    for (const auto& s : row.sessions) {
      Json sj;
      sj["problem_id"] = s.problem_id;
      sj["repetition"] = s.repetition;
      sj["seed"] = s.seed;
      sj["mean_error_pct"] = s.mean_error;
      sj["validation_distance"] = s.validation_distance;
      sj["graders_without_regular"] = s.graders_without_regular;
      if (include_positions) sj["position_errors"] = s.errors;
      rj["sessions"].push_back(std::move(sj));
    }
    j["rows"].push_back(std::move(rj));
  }
  return j;
}

Json to_json(const SimulationResult& result) {
  Json j;
  j["algorithm"] = std::string(assign::to_string(result.algorithm));
  j["mean_error_pct"] = result.mean_error;
  j["validation_distance"] = result.validation_distance;
  j["graders_without_regular"] = result.graders_without_regular;
  j["position_errors"] = result.errors;
  return j;
}

}  // namespace simgrade::simulate
