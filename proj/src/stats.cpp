#include "simgrade/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "simgrade/error.hpp"
#include "simgrade/random.hpp"

namespace simgrade::stats {

namespace {

double pct_error(const corpus::GradingLogEntry& e) {
  return std::abs(e.assigned_score - *e.true_score) / e.max_score * 100.0;
}

// Slope of y on x for index-resampled data; 0 when the resampled x is constant.
template <typename XAt, typename YAt>
double resampled_slope(std::size_t n, XAt x_at, YAt y_at) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x_at(i), y = y_at(i);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(n);
  const double vxx = sxx - sx * sx / nn;
  if (!(vxx > 0.0)) return 0.0;
  return (sxy - sx * sy / nn) / vxx;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptySample, "mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "ols_fit: |x| != |y|");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "ols_fit needs at least two points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::ConstantX, "ols_fit: x has zero variance");

  OlsFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    sse += r * r;
  }
  fit.rmse = std::sqrt(sse / static_cast<double>(x.size()));
  if (syy > 0.0) {
    fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  } else {
    fit.r2 = 0.0;
    fit.r2_defined = false;
  }
  return fit;
}

BootstrapResult bootstrap_mean_diff(std::span<const double> a, std::span<const double> b, std::size_t n_trials,
                                    std::uint64_t seed) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "bootstrap_mean_diff needs two non-empty samples");
  if (n_trials == 0) throw Error(ErrorCode::InvalidArgument, "n_trials must be >= 1");

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double observed = mean(a) - mean(b);
  const double scale = std::max({1.0, std::abs(mean(a)), std::abs(mean(b))});
  const double threshold = std::abs(observed) - 1e-12 * scale;

  std::size_t extreme = 0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    SplitMixStream rng(derive_seed(seed, {t}));
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += pooled[rng.index(pooled.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sb += pooled[rng.index(pooled.size())];
    const double diff = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
    if (std::abs(diff) >= threshold) ++extreme;
  }
  return {observed, static_cast<double>(extreme + 1) / static_cast<double>(n_trials + 1), n_trials};
}

BootstrapResult bootstrap_slope_test(std::span<const double> x, std::span<const double> y, std::size_t n_trials,
                                     std::uint64_t seed) {
  if (n_trials == 0) throw Error(ErrorCode::InvalidArgument, "n_trials must be >= 1");
  const double observed = ols_fit(x, y).slope;
  const double threshold = std::abs(observed) * (1.0 - 1e-12);
  const std::size_t n = x.size();
  std::vector<std::size_t> xi(n), yi(n);
  std::size_t extreme = 0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    SplitMixStream rng(derive_seed(seed, {t}));
    for (std::size_t i = 0; i < n; ++i) {
      xi[i] = rng.index(n);
      yi[i] = rng.index(n);
    }
    const double s = resampled_slope(n, [&](std::size_t i) { return x[xi[i]]; }, [&](std::size_t i) { return y[yi[i]]; });
    if (std::abs(s) >= threshold) ++extreme;
  }
  return {observed, static_cast<double>(extreme + 1) / static_cast<double>(n_trials + 1), n_trials};
}

GraderErrorReport grader_error_analysis(std::span<const corpus::GradingLogEntry> logs) {
  std::map<std::string, std::pair<std::size_t, double>> per_grader;
  std::vector<double> assigned_pct, true_pct;
  for (const auto& e : logs) {
    if (!e.is_validation || !e.true_score) continue;
    auto& [n, sum] = per_grader[e.grader_id];
    ++n;
    sum += pct_error(e);
    assigned_pct.push_back(e.assigned_score / e.max_score * 100.0);
    true_pct.push_back(*e.true_score / e.max_score * 100.0);
  }
  if (assigned_pct.empty()) throw Error(ErrorCode::NoValidationEntries, "no validation entries with a true score");

  GraderErrorReport report;
  report.n_entries = assigned_pct.size();
  for (const auto& [g, acc] : per_grader) {
    report.graders.push_back({g, acc.first, acc.second / static_cast<double>(acc.first)});
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < assigned_pct.size(); ++i) {
    const double d = assigned_pct[i] - true_pct[i];
    sq += d * d;
  }
  report.rmse = std::sqrt(sq / static_cast<double>(assigned_pct.size()));
  if (assigned_pct.size() >= 2) {
    try {
      report.fit = ols_fit(true_pct, assigned_pct);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstantX) throw;
    }
  }
  return report;
}

WindowAnalysis window_similarity_analysis(std::span<const corpus::GradingLogEntry> logs,
                                          std::span<const embed::ProgramEmbedding> embeddings, std::size_t window,
                                          bool include_validation_history) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be >= 1");
  std::unordered_map<std::string, const std::vector<double>*> vectors;
  for (const auto& e : embeddings) vectors.emplace(e.submission_id, &e.vector);
  auto vector_of = [&](const std::string& id) -> const std::vector<double>& {
    auto it = vectors.find(id);
    if (it == vectors.end()) throw Error(ErrorCode::MissingEmbedding, id);
    return *it->second;
  };

  std::vector<corpus::GradingLogEntry> sorted(logs.begin(), logs.end());
  corpus::sort_grading_logs(sorted);

  WindowAnalysis out;
  out.window = window;
  bool any_validation = false;
  std::size_t begin = 0;
  while (begin < sorted.size()) {
    std::size_t end = begin;
    while (end < sorted.size() && sorted[end].grader_id == sorted[begin].grader_id) ++end;

    std::vector<std::size_t> history;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& e = sorted[i];
      if (e.is_validation && e.true_score) {
        any_validation = true;
        if (!history.empty()) {
          const auto& current = vector_of(e.submission_id);
          double best = -1.0;
          const std::size_t from = history.size() > window ? history.size() - window : 0;
          for (std::size_t h = from; h < history.size(); ++h) {
            best = std::max(best, embed::cosine_similarity(current, vector_of(sorted[history[h]].submission_id)));
          }
          out.pairs.push_back({e.grader_id, e.submission_id, e.timestamp_ms, best, pct_error(e)});
        }
      }
      if (!e.is_validation || include_validation_history) history.push_back(i);
    }
    begin = end;
  }
  if (!any_validation) throw Error(ErrorCode::NoValidationEntries, "no validation entries with a true score");

  if (out.pairs.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& p : out.pairs) {
      x.push_back(p.max_similarity);
      y.push_back(p.pct_error);
    }
    try {
      out.fit = ols_fit(x, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstantX) throw;
    }
  }
  return out;
}

Json to_json(const OlsFit& fit) {
  Json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r2_defined ? Json(fit.r2) : Json(nullptr);
  j["rmse"] = fit.rmse;
  j["n"] = fit.n;
  return j;
}

}  // namespace simgrade::stats
