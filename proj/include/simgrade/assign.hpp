#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simgrade/embed.hpp"
#include "simgrade/json_io.hpp"

namespace simgrade::assign {

enum class Algorithm { Random, Cluster, ClusterPath, Snake, PetalLoop, PetalPath };

std::string_view to_string(Algorithm a) noexcept;
// Throws InvalidArgument for unknown names.
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();

struct AssignmentConfig {
  std::size_t n_graders = 10;
  Algorithm algorithm = Algorithm::Random;
  std::size_t n_validations = 5;
  std::uint64_t seed = 0;
  std::size_t mcmc_iterations = 50'000;
  double mcmc_initial_temp = 1.0;
  double mcmc_cooling = 0.9995;
  std::size_t kmeans_max_iters = 100;
};

struct QueueEntry {
  std::string id;
  bool validation = false;

  friend bool operator==(const QueueEntry&, const QueueEntry&) = default;
};

struct GraderQueue {
  std::vector<QueueEntry> entries;

  friend bool operator==(const GraderQueue&, const GraderQueue&) = default;
};

struct Assignment {
  Algorithm algorithm = Algorithm::Random;
  std::uint64_t seed = 0;
  std::vector<GraderQueue> graders;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct ValidationSplit {
  std::vector<std::string> validation;
  std::vector<std::string> remaining;  // input order preserved
};

// Uniform sample without replacement. Throws NTooLarge when n >= |ids|.
ValidationSplit select_validations(std::span<const std::string> ids, std::size_t n, std::uint64_t seed);

// Uniform random partition into cfg.n_graders parts whose sizes differ by at
// most one. Throws TooFewSubmissions.
std::vector<std::vector<std::string>> assign_random(std::span<const std::string> ids, const AssignmentConfig& cfg);

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centroids;  // unit length
  std::vector<double> objective_history;       // mean cosine to own centroid after each update
  std::size_t iterations = 0;
  bool converged = false;
};

// Spherical k-means with k-means++ seeding on cosine distance.
// Throws KExceedsN / ZeroVector / InvalidArgument.
KMeansResult kmeans_cosine(std::span<const embed::ProgramEmbedding> embs, std::size_t k, std::uint64_t seed,
                           std::size_t max_iters);

// Nearest-neighbour chain by similarity: ids are indices into `sim`. Ties go
// to the lexicographically smallest id. Throws StartNotInSet.
std::vector<std::string> order_greedy_path(std::span<const std::string> ids, const embed::SimilarityMatrix& sim,
                                           const std::string& start);

std::vector<std::vector<std::string>> assign_snake(std::span<const std::string> ids,
                                                   const embed::SimilarityMatrix& sim, const AssignmentConfig& cfg);

struct PlanarCoords {
  std::vector<double> x;
  std::vector<double> y;
  bool degenerate = false;  // covariance rank < 2
};

// Top-two principal components, standardized (sample variance 1).
// Throws InvalidArgument for n < 3 or dim < 2.
PlanarCoords pca_2d(std::span<const embed::ProgramEmbedding> embs);

struct Petals {
  std::string common;                          // minimal-norm point in the plane
  std::vector<std::vector<std::string>> petals;  // each begins with `common`
  std::size_t common_owner = 0;                // petal whose sector contains `common`
  bool degenerate = false;
};

// Angular sectors [2*pi*j/k, 2*pi*(j+1)/k) of the plane, computed from coordinates.
Petals petals_from_coords(std::span<const std::string> ids, const PlanarCoords& coords, std::size_t k);
Petals assign_petal(std::span<const embed::ProgramEmbedding> embs, std::size_t k);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct LoopResult {
  std::vector<std::size_t> order;  // indices into the input points
  double length = 0.0;
  std::vector<double> best_length_history;  // best length after each iteration
};

double cycle_length(std::span<const Point2> points, std::span<const std::size_t> order);

// Simulated-annealing Metropolis chain over tours with 2-opt reversals;
// returns the best tour seen, rotated to begin at index 0 of the input.
LoopResult order_mcmc_loop(std::span<const Point2> points, const AssignmentConfig& cfg, std::uint64_t seed,
                           bool record_history = false);

// Full pipeline: validation selection, partitioning, ordering, then
// insertion of every validation into every queue at uniform random positions.
Assignment build_assignment(std::span<const embed::ProgramEmbedding> embs, const AssignmentConfig& cfg);
Assignment build_assignment(std::span<const embed::ProgramEmbedding> embs, const embed::SimilarityMatrix& sim,
                            const AssignmentConfig& cfg);

// Empty when the assignment covers `regular` exactly once and every queue
// holds every id of `validation` exactly once.
std::vector<std::string> check_assignment(const Assignment& a, std::span<const std::string> regular,
                                          std::span<const std::string> validation);

Json to_json(const Assignment& a);
Assignment assignment_from_json(const Json& j);

}  // namespace simgrade::assign
