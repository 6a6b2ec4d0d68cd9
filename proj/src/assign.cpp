#include "simgrade/assign.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "simgrade/error.hpp"
#include "simgrade/random.hpp"

namespace simgrade::assign {

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t { kTagValidation = 1, kTagPartition, kTagKMeans, kTagOrder, kTagInsert, kTagLoop };

std::uint64_t grader_seed(std::uint64_t seed, std::size_t grader, std::uint64_t tag) {
  return derive_seed(seed ^ static_cast<std::uint64_t>(grader), {tag});
}

std::vector<double> normalized(const std::vector<double>& v, const std::string& id) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, id);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Cyclic Jacobi rotations on a symmetric matrix (row-major, n x n).
// Returns eigenvalues; eigenvectors are the columns of `vectors`.
std::vector<double> jacobi_eigen(std::vector<double> a, std::size_t n, std::vector<double>& vectors) {
  vectors.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  double scale = 0.0;
  for (double v : a) scale += v * v;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off <= 1e-30 * scale || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
          vectors[k * n + p] = c * vkp - s * vkq;
          vectors[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = A(i, i);
  return values;
}

void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double& x : v) {
    x -= m;
    ss += x * x;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd > 0.0) {
    for (double& x : v) x /= sd;
  }
}

std::vector<QueueEntry> regular_entries(const std::vector<std::string>& ids) {
  std::vector<QueueEntry> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back({id, false});
  return out;
}

}  // namespace

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Random: return "random";
    case Algorithm::Cluster: return "cluster";
    case Algorithm::ClusterPath: return "cluster_path";
    case Algorithm::Snake: return "snake";
    case Algorithm::PetalLoop: return "petal_loop";
    case Algorithm::PetalPath: return "petal_path";
  }
  return "unknown";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {Algorithm::Random, Algorithm::Cluster,   Algorithm::ClusterPath,
                                             Algorithm::Snake,  Algorithm::PetalLoop, Algorithm::PetalPath};
  return all;
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : all_algorithms()) {
    if (to_string(a) == name) return a;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

ValidationSplit select_validations(std::span<const std::string> ids, std::size_t n, std::uint64_t seed) {
  if (n >= ids.size() && !(n == 0 && ids.empty())) {
    throw Error(ErrorCode::NTooLarge, std::to_string(n) + " validations from " + std::to_string(ids.size()) +
                                          " submissions");
  }
  Rng rng(derive_seed(seed, {kTagValidation}));
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + uniform_index(rng, ids.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<bool> picked(ids.size(), false);
  ValidationSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    split.validation.push_back(ids[order[i]]);
    picked[order[i]] = true;
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!picked[i]) split.remaining.push_back(ids[i]);
  }
  return split;
}

std::vector<std::vector<std::string>> assign_random(std::span<const std::string> ids, const AssignmentConfig& cfg) {
  const std::size_t k = cfg.n_graders;
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "n_graders must be >= 1");
  if (ids.size() < k) {
    throw Error(ErrorCode::TooFewSubmissions,
                std::to_string(ids.size()) + " submissions for " + std::to_string(k) + " graders");
  }
  std::vector<std::string> shuffled(ids.begin(), ids.end());
  Rng rng(derive_seed(cfg.seed, {kTagPartition}));
  shuffle(std::span<std::string>(shuffled), rng);
  std::vector<std::vector<std::string>> parts(k);
  for (std::size_t i = 0; i < shuffled.size(); ++i) parts[i % k].push_back(std::move(shuffled[i]));
  return parts;
}

KMeansResult kmeans_cosine(std::span<const embed::ProgramEmbedding> embs, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters) {
  const std::size_t n = embs.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (k > n) throw Error(ErrorCode::KExceedsN, "k=" + std::to_string(k) + " > n=" + std::to_string(n));
  std::vector<std::vector<double>> unit;
  unit.reserve(n);
  for (const auto& e : embs) {
    if (!unit.empty() && e.vector.size() != unit.front().size()) {
      throw Error(ErrorCode::DimensionMismatch, e.submission_id);
    }
    unit.push_back(normalized(e.vector, e.submission_id));
  }

  // k-means++ seeding with squared cosine distance.
  Rng rng(seed);
  KMeansResult res;
  std::vector<bool> chosen(n, false);
  std::vector<double> best_cos(n, -2.0);
  std::size_t first = uniform_index(rng, n);
  res.centroids.push_back(unit[first]);
  chosen[first] = true;
  while (res.centroids.size() < k) {
    const auto& c = res.centroids.back();
    double total = 0.0;
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      best_cos[i] = std::max(best_cos[i], dot(unit[i], c));
      if (chosen[i]) continue;
      const double d = std::max(0.0, 1.0 - best_cos[i]);
      weight[i] = d * d;
      total += weight[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = uniform_unit(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (weight[i] <= 0.0) continue;
        pick = i;
        if (u < weight[i]) break;
        u -= weight[i];
      }
    } else {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[uniform_index(rng, free.size())];
    }
    chosen[pick] = true;
    res.centroids.push_back(unit[pick]);
  }

  std::vector<std::size_t> labels(n, 0), previous;
  std::vector<double> own_cos(n, 0.0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bc = -2.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double s = dot(unit[i], res.centroids[c]);
        if (s > bc) {
          bc = s;
          best = c;
        }
      }
      labels[i] = best;
      own_cos[i] = bc;
    }
    // Reseed empty clusters with the point farthest from its centroid.
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t worst = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] > 1 && (worst == n || own_cos[i] < own_cos[worst])) worst = i;
      }
      --sizes[labels[worst]];
      labels[worst] = c;
      sizes[c] = 1;
      own_cos[worst] = 1.0;
      res.centroids[c] = unit[worst];
    }
    res.iterations = iter + 1;
    if (labels == previous) {
      res.converged = true;
      break;
    }
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> sum(unit.front().size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != c) continue;
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += unit[i][d];
      }
      double norm = std::sqrt(dot(sum, sum));
      if (norm > 0.0) {
        for (auto& v : sum) v /= norm;
        res.centroids[c] = std::move(sum);
      }
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += dot(unit[i], res.centroids[labels[i]]);
    res.objective_history.push_back(obj / static_cast<double>(n));
    previous = labels;
  }
  res.labels = std::move(labels);
  return res;
}

std::vector<std::string> order_greedy_path(std::span<const std::string> ids, const embed::SimilarityMatrix& sim,
                                           const std::string& start) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  std::size_t start_pos = ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = sim.index_of(ids[i]);
    if (r < 0) throw Error(ErrorCode::UnknownSubmissionInQueue, ids[i]);
    rows.push_back(static_cast<std::size_t>(r));
    if (ids[i] == start && start_pos == ids.size()) start_pos = i;
  }
  if (start_pos == ids.size()) throw Error(ErrorCode::StartNotInSet, start);

  std::vector<bool> visited(ids.size(), false);
  std::vector<std::string> path;
  path.reserve(ids.size());
  std::size_t current = start_pos;
  visited[current] = true;
  path.push_back(ids[current]);
  for (std::size_t step = 1; step < ids.size(); ++step) {
    std::size_t next = ids.size();
    double best = 0.0;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (visited[j]) continue;
      const double s = sim.at(rows[current], rows[j]);
      if (next == ids.size() || s > best || (s == best && ids[j] < ids[next])) {
        next = j;
        best = s;
      }
    }
    visited[next] = true;
    path.push_back(ids[next]);
    current = next;
  }
  return path;
}

std::vector<std::vector<std::string>> assign_snake(std::span<const std::string> ids,
                                                   const embed::SimilarityMatrix& sim, const AssignmentConfig& cfg) {
  auto parts = assign_random(ids, cfg);
  for (std::size_t g = 0; g < parts.size(); ++g) {
    Rng rng(grader_seed(cfg.seed, g, kTagOrder));
    const auto start = parts[g][uniform_index(rng, parts[g].size())];
    parts[g] = order_greedy_path(parts[g], sim, start);
  }
  return parts;
}

PlanarCoords pca_2d(std::span<const embed::ProgramEmbedding> embs) {
  const std::size_t n = embs.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "pca_2d needs at least 3 points");
  const std::size_t dim = embs.front().vector.size();
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "pca_2d needs dim >= 2");
  for (const auto& e : embs) {
    if (e.vector.size() != dim) throw Error(ErrorCode::DimensionMismatch, e.submission_id);
  }

  std::vector<double> mu(dim, 0.0);
  for (const auto& e : embs)
    for (std::size_t d = 0; d < dim; ++d) mu[d] += e.vector[d];
  for (auto& m : mu) m /= static_cast<double>(n);
  std::vector<double> centered(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) centered[i * dim + d] = embs[i].vector[d] - mu[d];

  std::vector<double> cov(dim * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = centered.data() + i * dim;
    for (std::size_t a = 0; a < dim; ++a) {
      const double ra = row[a];
      for (std::size_t b = a; b < dim; ++b) cov[a * dim + b] += ra * row[b];
    }
  }
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      cov[a * dim + b] /= static_cast<double>(n - 1);
      cov[b * dim + a] = cov[a * dim + b];
    }
  }

  std::vector<double> vecs;
  const auto vals = jacobi_eigen(cov, dim, vecs);
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });

  PlanarCoords out;
  out.x.assign(n, 0.0);
  out.y.assign(n, 0.0);
  const double top = vals[order[0]];
  double trace = 0.0;
  for (std::size_t d = 0; d < dim; ++d) trace += cov[d * dim + d];
  const double tol = 1e-12 * std::max(trace, 1e-300);
  const std::size_t usable = top <= tol ? 0 : (vals[order[1]] <= tol ? 1 : 2);
  out.degenerate = usable < 2;

  for (std::size_t c = 0; c < usable; ++c) {
    std::vector<double> axis(dim);
    std::size_t largest = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      axis[d] = vecs[d * dim + order[c]];
      if (std::abs(axis[d]) > std::abs(axis[largest])) largest = d;
    }
    if (axis[largest] < 0) {
      for (auto& v : axis) v = -v;
    }
    auto& coord = c == 0 ? out.x : out.y;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += centered[i * dim + d] * axis[d];
      coord[i] = s;
    }
    standardize(coord);
  }
  return out;
}

Petals petals_from_coords(std::span<const std::string> ids, const PlanarCoords& coords, std::size_t k) {
  const std::size_t n = ids.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (n < k) throw Error(ErrorCode::TooFewSubmissions, std::to_string(n) + " points for " + std::to_string(k) + " petals");
  if (coords.x.size() != n || coords.y.size() != n) throw Error(ErrorCode::DimensionMismatch, "coords vs ids");

  Petals out;
  out.degenerate = coords.degenerate;
  std::size_t centre = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double ri = std::hypot(coords.x[i], coords.y[i]);
    const double rc = std::hypot(coords.x[centre], coords.y[centre]);
    if (ri < rc || (ri == rc && ids[i] < ids[centre])) centre = i;
  }
  out.common = ids[centre];
  out.petals.assign(k, {out.common});

  const double sector = 2.0 * std::numbers::pi / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    double theta = std::atan2(coords.y[i], coords.x[i]);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    auto j = static_cast<std::size_t>(std::floor(theta / sector));
    j = std::min(j, k - 1);
    if (i == centre) {
      out.common_owner = j;
    } else {
      out.petals[j].push_back(ids[i]);
    }
  }
  return out;
}

Petals assign_petal(std::span<const embed::ProgramEmbedding> embs, std::size_t k) {
  std::vector<std::string> ids;
  for (const auto& e : embs) ids.push_back(e.submission_id);
  return petals_from_coords(ids, pca_2d(embs), k);
}

double cycle_length(std::span<const Point2> points, std::span<const std::size_t> order) {
  if (order.size() < 2) return 0.0;
  double len = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& a = points[order[i]];
    const auto& b = points[order[(i + 1) % order.size()]];
    len += std::hypot(a.x - b.x, a.y - b.y);
  }
  return len;
}

LoopResult order_mcmc_loop(std::span<const Point2> points, const AssignmentConfig& cfg, std::uint64_t seed,
                           bool record_history) {
  const std::size_t m = points.size();
  LoopResult res;
  res.order.resize(m);
  std::iota(res.order.begin(), res.order.end(), 0);
  res.length = cycle_length(points, res.order);
  if (m <= 3) return res;

  auto dist = [&](std::size_t a, std::size_t b) {
    return std::hypot(points[a].x - points[b].x, points[a].y - points[b].y);
  };
  std::vector<std::size_t> tour = res.order;
  double length = res.length;
  double temp = cfg.mcmc_initial_temp;
  Rng rng(seed);
  if (record_history) res.best_length_history.reserve(cfg.mcmc_iterations);
  for (std::size_t t = 0; t < cfg.mcmc_iterations; ++t) {
    // Position 0 stays fixed; reverse tour[i..j] with 1 <= i < j <= m-1.
    std::size_t i = 1 + uniform_index(rng, m - 1);
    std::size_t j = 1 + uniform_index(rng, m - 1);
    if (i > j) std::swap(i, j);
    if (i != j) {
      const std::size_t a = tour[i - 1], b = tour[i], c = tour[j], d = tour[(j + 1) % m];
      const double delta = dist(a, c) + dist(b, d) - dist(a, b) - dist(c, d);
      if (delta <= 0.0 || uniform_unit(rng) < std::exp(-delta / temp)) {
        std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(i), tour.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        length += delta;
        if (length < res.length - 1e-12) {
          // Re-measure to keep drift from accumulating in the running sum.
          length = cycle_length(points, tour);
          if (length < res.length) {
            res.length = length;
            res.order = tour;
          }
        }
      }
    }
    temp *= cfg.mcmc_cooling;
    if (record_history) res.best_length_history.push_back(res.length);
  }
  return res;
}

Assignment build_assignment(std::span<const embed::ProgramEmbedding> embs, const AssignmentConfig& cfg) {
  return build_assignment(embs, embed::pairwise_similarity(embs), cfg);
}

Assignment build_assignment(std::span<const embed::ProgramEmbedding> embs, const embed::SimilarityMatrix& sim,
                            const AssignmentConfig& cfg) {
  const std::size_t k = cfg.n_graders;
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "n_graders must be >= 1");
  std::vector<std::string> ids;
  ids.reserve(embs.size());
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < embs.size(); ++i) {
    ids.push_back(embs[i].submission_id);
    if (!pos.emplace(embs[i].submission_id, i).second) throw Error(ErrorCode::DuplicateId, embs[i].submission_id);
  }
  if (ids.size() <= cfg.n_validations || ids.size() - cfg.n_validations < k) {
    throw Error(ErrorCode::TooFewSubmissions, std::to_string(ids.size()) + " submissions with " +
                                                  std::to_string(cfg.n_validations) + " validations for " +
                                                  std::to_string(k) + " graders");
  }
  const auto split = select_validations(ids, cfg.n_validations, cfg.seed);
  const auto& regular = split.remaining;
  std::vector<embed::ProgramEmbedding> regular_embs;
  regular_embs.reserve(regular.size());
  for (const auto& id : regular) regular_embs.push_back(embs[pos.at(id)]);

  std::vector<std::vector<std::string>> queues(k);
  switch (cfg.algorithm) {
    case Algorithm::Random:
      queues = assign_random(regular, cfg);
      break;
    case Algorithm::Snake:
      queues = assign_snake(regular, sim, cfg);
      break;
    case Algorithm::Cluster:
    case Algorithm::ClusterPath: {
      const auto km = kmeans_cosine(regular_embs, k, derive_seed(cfg.seed, {kTagKMeans}), cfg.kmeans_max_iters);
      for (std::size_t i = 0; i < regular.size(); ++i) queues[km.labels[i]].push_back(regular[i]);
      for (std::size_t g = 0; g < k; ++g) {
        if (queues[g].empty()) continue;
        Rng rng(grader_seed(cfg.seed, g, kTagOrder));
        if (cfg.algorithm == Algorithm::Cluster) {
          shuffle(std::span<std::string>(queues[g]), rng);
        } else {
          const auto start = queues[g][uniform_index(rng, queues[g].size())];
          queues[g] = order_greedy_path(queues[g], sim, start);
        }
      }
      break;
    }
    case Algorithm::PetalLoop:
    case Algorithm::PetalPath: {
      const auto coords = pca_2d(regular_embs);
      const auto petals = petals_from_coords(regular, coords, k);
      std::unordered_map<std::string, std::size_t> reg_pos;
      for (std::size_t i = 0; i < regular.size(); ++i) reg_pos.emplace(regular[i], i);
      for (std::size_t g = 0; g < k; ++g) {
        const auto& members = petals.petals[g];
        std::vector<std::string> ordered;
        if (cfg.algorithm == Algorithm::PetalLoop) {
          std::vector<Point2> pts;
          pts.reserve(members.size());
          for (const auto& id : members) {
            const auto r = reg_pos.at(id);
            pts.push_back({coords.x[r], coords.y[r]});
          }
          const auto loop = order_mcmc_loop(pts, cfg, grader_seed(cfg.seed, g, kTagLoop));
          for (auto idx : loop.order) ordered.push_back(members[idx]);
        } else {
          ordered = order_greedy_path(members, sim, petals.common);
        }
        // The shared centre belongs to one grader; the others start next to it.
        if (g != petals.common_owner) ordered.erase(ordered.begin());
        queues[g] = std::move(ordered);
      }
      break;
    }
  }

  Assignment out;
  out.algorithm = cfg.algorithm;
  out.seed = cfg.seed;
  out.graders.resize(k);
  for (std::size_t g = 0; g < k; ++g) {
    auto entries = regular_entries(queues[g]);
    Rng rng(grader_seed(cfg.seed, g, kTagInsert));
    auto vals = split.validation;
    shuffle(std::span<std::string>(vals), rng);
    for (const auto& v : vals) {
      const auto at = uniform_index(rng, entries.size() + 1);
      entries.insert(entries.begin() + static_cast<std::ptrdiff_t>(at), QueueEntry{v, true});
    }
    out.graders[g].entries = std::move(entries);
  }
  return out;
}

std::vector<std::string> check_assignment(const Assignment& a, std::span<const std::string> regular,
                                          std::span<const std::string> validation) {
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> regular_seen;
  for (const auto& id : regular) regular_seen.emplace(id, 0);
  for (std::size_t g = 0; g < a.graders.size(); ++g) {
    std::map<std::string, std::size_t> val_seen;
    for (const auto& id : validation) val_seen.emplace(id, 0);
    for (const auto& e : a.graders[g].entries) {
      if (e.validation) {
        auto it = val_seen.find(e.id);
        if (it == val_seen.end()) {
          problems.push_back("grader " + std::to_string(g) + ": unexpected validation " + e.id);
        } else {
          ++it->second;
        }
      } else {
        auto it = regular_seen.find(e.id);
        if (it == regular_seen.end()) {
          problems.push_back("grader " + std::to_string(g) + ": unexpected submission " + e.id);
        } else {
          ++it->second;
        }
      }
    }
    for (const auto& [id, n] : val_seen) {
      if (n != 1) problems.push_back("grader " + std::to_string(g) + ": validation " + id + " seen " + std::to_string(n) + "x");
    }
  }
  for (const auto& [id, n] : regular_seen) {
    if (n != 1) problems.push_back("submission " + id + " assigned " + std::to_string(n) + "x");
  }
  return problems;
}

Json to_json(const Assignment& a) {
  Json j;
  j["algorithm"] = std::string(to_string(a.algorithm));
  j["seed"] = a.seed;
  j["graders"] = Json::array();
  for (std::size_t g = 0; g < a.graders.size(); ++g) {
    Json gj;
    gj["grader"] = g;
    gj["queue"] = Json::array();
    for (const auto& e : a.graders[g].entries) {
      Json ej;
      ej["id"] = e.id;
      ej["validation"] = e.validation;
      gj["queue"].push_back(std::move(ej));
    }
    j["graders"].push_back(std::move(gj));
  }
  return j;
}

Assignment assignment_from_json(const Json& j) {
  Assignment a;
  try {
    a.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    a.seed = j.at("seed").get<std::uint64_t>();
    const auto& graders = j.at("graders");
    a.graders.resize(graders.size());
    for (const auto& gj : graders) {
      const auto g = gj.at("grader").get<std::size_t>();
      if (g >= a.graders.size()) throw Error(ErrorCode::MalformedRecord, "grader index out of range");
      for (const auto& ej : gj.at("queue")) {
        a.graders[g].entries.push_back({ej.at("id").get<std::string>(), ej.at("validation").get<bool>()});
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("assignment: ") + e.what());
  }
  return a;
}

}  // namespace simgrade::assign
