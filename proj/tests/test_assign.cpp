#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "simgrade/assign.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace simgrade;
using namespace simgrade::assign;
using embed::ProgramEmbedding;
using test_support::id_of;
using test_support::ids_of;
using test_support::random_embeddings;
using namespace test_support::oracles;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(id_of(i));
  return ids;
}

double sample_mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
double sample_var(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("algorithm names round trip") {
  for (auto a : all_algorithms()) CHECK(parse_algorithm(to_string(a)) == a);
  REQUIRE_THROWS_CODE(parse_algorithm("bogus"), ErrorCode::InvalidArgument);
}

TEST_CASE("select_validations") {
  const auto ids = make_ids(444);
  const auto split = select_validations(ids, 5, 1);
  CHECK(split.validation.size() == 5);
  CHECK(split.remaining.size() == 439);
  std::set<std::string> all(split.validation.begin(), split.validation.end());
  all.insert(split.remaining.begin(), split.remaining.end());
  CHECK(all.size() == 444);
  CHECK(std::is_sorted(split.remaining.begin(), split.remaining.end()));

  CHECK(select_validations(ids, 0, 1).validation.empty());
  CHECK(select_validations(ids, 5, 9).validation == select_validations(ids, 5, 9).validation);
  REQUIRE_THROWS_CODE(select_validations(make_ids(3), 3, 1), ErrorCode::NTooLarge);
}

TEST_CASE("select_validations is uniform") {
  const auto ids = make_ids(10);
  std::vector<int> hits(10, 0);
  for (std::uint64_t s = 0; s < 20000; ++s)
    for (const auto& v : select_validations(ids, 2, s).validation) ++hits[std::stoul(v.substr(1))];
  for (int h : hits) CHECK(std::abs(h / 20000.0 - 0.2) < 0.02);
}

TEST_CASE("assign_random partition sizes") {
  AssignmentConfig cfg;
  const auto ids = make_ids(439);
  const auto parts = assign_random(ids, cfg);
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) sizes.push_back(p.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{43, 44, 44, 44, 44, 44, 44, 44, 44, 44});

  cfg.n_graders = 1;
  CHECK(assign_random(ids, cfg)[0].size() == 439);
  cfg.n_graders = 439;
  for (const auto& p : assign_random(ids, cfg)) CHECK(p.size() == 1);
  cfg.n_graders = 440;
  REQUIRE_THROWS_CODE(assign_random(ids, cfg), ErrorCode::TooFewSubmissions);
}

TEST_CASE("kmeans_cosine trivial cases") {
  const auto embs = random_embeddings(6, 4, 3);
  SECTION("k = n") {
    const auto r = kmeans_cosine(embs, 6, 1, 100);
    CHECK(std::set<std::size_t>(r.labels.begin(), r.labels.end()).size() == 6);
    CHECK(r.objective_history.back() == Catch::Approx(1.0));
  }
  SECTION("k = 1") {
    const auto r = kmeans_cosine(embs, 1, 1, 100);
    std::vector<double> mean(4, 0.0);
    for (const auto& e : embs) {
      const double n = std::sqrt(std::inner_product(e.vector.begin(), e.vector.end(), e.vector.begin(), 0.0));
      for (int d = 0; d < 4; ++d) mean[d] += e.vector[d] / n;
    }
    const double n = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
    for (int d = 0; d < 4; ++d) CHECK(r.centroids[0][d] == Catch::Approx(mean[d] / n).margin(1e-12));
  }
  SECTION("k > n") { REQUIRE_THROWS_CODE(kmeans_cosine(embs, 7, 1, 100), ErrorCode::KExceedsN); }
}

TEST_CASE("kmeans_cosine matches the brute-force optimum on separated bundles") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + trial % 2, n = 6 + trial % 3;
    const auto embs = bundles(n, k, 5, rng);
    const auto r = kmeans_cosine(embs, k, static_cast<std::uint64_t>(trial), 100);
    CHECK(canonical(r.labels) == canonical(brute_force_kmeans(embs, k)));
  }
}

TEST_CASE("kmeans objective is non-decreasing") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto embs = random_embeddings(80, 6, seed);
    const auto r = kmeans_cosine(embs, 5, seed, 100);
    for (std::size_t i = 1; i < r.objective_history.size(); ++i)
      REQUIRE(r.objective_history[i] >= r.objective_history[i - 1] - 1e-12);
    for (const auto& c : r.centroids)
      CHECK(std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0)) == Catch::Approx(1.0));
  }
}

TEST_CASE("order_greedy_path") {
  const std::vector<ProgramEmbedding> one = {{"a", {1.0, 0.0}}};
  const std::vector<std::string> a = {"a"};
  CHECK(order_greedy_path(a, embed::pairwise_similarity(one), "a") == a);

  // Directions fanning out monotonically in angle.
  std::vector<ProgramEmbedding> line;
  for (int i = 0; i < 6; ++i) line.push_back({id_of(static_cast<std::size_t>(5 - i)), {std::cos(0.2 * i), std::sin(0.2 * i)}});
  const auto sim = embed::pairwise_similarity(line);
  const auto ids = ids_of(line);
  CHECK(order_greedy_path(ids, sim, id_of(5)) == ids);
  REQUIRE_THROWS_CODE(order_greedy_path(ids, sim, "zz"), ErrorCode::StartNotInSet);
}

TEST_CASE("order_greedy_path matches an independent greedy oracle") {
  std::mt19937_64 rng(55);
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    auto embs = random_embeddings(10, 4, 1000 + trial);
    std::shuffle(embs.begin(), embs.end(), rng);
    const auto ids = ids_of(embs);
    const auto start = ids[rng() % ids.size()];
    const auto path = order_greedy_path(ids, embed::pairwise_similarity(embs), start);
    CHECK(path == greedy_oracle(embs, start));
  }
}

TEST_CASE("order_greedy_path breaks ties lexicographically") {
  const std::vector<ProgramEmbedding> embs = {{"m", {1.0, 0.0}}, {"z", {0.0, 1.0}}, {"b", {0.0, 1.0}}, {"c", {0.0, 1.0}}};
  const auto ids = ids_of(embs);
  CHECK(order_greedy_path(ids, embed::pairwise_similarity(embs), "m") == std::vector<std::string>{"m", "b", "c", "z"});
}

TEST_CASE("assign_snake") {
  const auto embs = random_embeddings(439, 5, 8);
  const auto ids = ids_of(embs);
  const auto sim = embed::pairwise_similarity(embs);
  AssignmentConfig cfg;
  cfg.seed = 77;
  const auto parts = assign_random(ids, cfg);
  const auto snake = assign_snake(ids, sim, cfg);
  REQUIRE(snake.size() == parts.size());
  for (std::size_t g = 0; g < parts.size(); ++g) {
    CHECK(std::is_permutation(snake[g].begin(), snake[g].end(), parts[g].begin(), parts[g].end()));
    // After the start, each step is the greedy choice within the subset.
    CHECK(order_greedy_path(parts[g], sim, snake[g].front()) == snake[g]);
  }

  const std::vector<ProgramEmbedding> three = {{"a", {1.0, 0.0}}, {"b", {1.0, 0.3}}, {"c", {1.0, 0.9}}};
  cfg.n_graders = 1;
  const auto order = assign_snake(ids_of(three), embed::pairwise_similarity(three), cfg)[0];
  if (order.front() == "a") CHECK(order == std::vector<std::string>{"a", "b", "c"});
  if (order.front() == "c") CHECK(order == std::vector<std::string>{"c", "b", "a"});
}

TEST_CASE("pca_2d matches an eigendecomposition oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto embs = random_embeddings(20, 10, 300 + seed);
    const auto coords = pca_2d(embs);
    REQUIRE_FALSE(coords.degenerate);

    CHECK(pca_oracle_deviation(embs, coords) < 1e-8);
    for (const auto* v : {&coords.x, &coords.y}) {
      CHECK(std::abs(sample_mean(*v)) < 1e-9);
      CHECK(std::abs(sample_var(*v) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("pca_2d degenerate and planar inputs") {
  SECTION("points on a line") {
    std::vector<ProgramEmbedding> embs;
    for (int i = 0; i < 10; ++i) embs.push_back({id_of(static_cast<std::size_t>(i)), {1.0 * i, 2.0 * i, -1.0 * i, 0.5 * i}});
    const auto c = pca_2d(embs);
    CHECK(c.degenerate);
    for (double y : c.y) CHECK(y == 0.0);
  }
  SECTION("two-dimensional input keeps its geometry up to rotation and axis scaling") {
    const auto embs = random_embeddings(30, 2, 4);
    const auto c = pca_2d(embs);
    REQUIRE_FALSE(c.degenerate);
    // Whitened data: the coordinates relate to the centred input through an
    // invertible linear map, so a least-squares fit reproduces them exactly.
    Eigen::MatrixXd X(30, 2), Y(30, 2);
    for (int i = 0; i < 30; ++i) {
      X(i, 0) = embs[static_cast<std::size_t>(i)].vector[0];
      X(i, 1) = embs[static_cast<std::size_t>(i)].vector[1];
      Y(i, 0) = c.x[static_cast<std::size_t>(i)];
      Y(i, 1) = c.y[static_cast<std::size_t>(i)];
    }
    X.rowwise() -= X.colwise().mean();
    const Eigen::MatrixXd A = X.colPivHouseholderQr().solve(Y);
    CHECK((X * A - Y).cwiseAbs().maxCoeff() < 1e-9);
  }
  SECTION("too few points") { REQUIRE_THROWS_CODE(pca_2d(random_embeddings(2, 3, 1)), ErrorCode::InvalidArgument); }
}

TEST_CASE("petals_from_coords") {
  SECTION("k = 1 holds everything") {
    const auto ids = make_ids(5);
    const PlanarCoords c{{1, -1, 0.1, 2, -2}, {0, 1, 0.1, -2, -1}, false};
    const auto p = petals_from_coords(ids, c, 1);
    REQUIRE(p.petals.size() == 1);
    CHECK(p.petals[0].size() == 5);
    CHECK(p.common == id_of(2));
    CHECK(p.petals[0].front() == p.common);
  }
  SECTION("one point per quadrant") {
    const std::vector<std::string> ids = {"a", "b", "c", "d"};
    const PlanarCoords c{{1, -1, -1, 1}, {1, 1, -1, -1}, false};
    const auto p = petals_from_coords(ids, c, 4);
    CHECK(p.common == "a");
    CHECK(p.common_owner == 0);
    CHECK(p.petals[0] == std::vector<std::string>{"a"});
    CHECK(p.petals[1] == std::vector<std::string>{"a", "b"});
    CHECK(p.petals[2] == std::vector<std::string>{"a", "c"});
    CHECK(p.petals[3] == std::vector<std::string>{"a", "d"});
  }
  SECTION("boundary angles belong to the sector they open") {
    const std::vector<std::string> ids = {"o", "up", "left", "east"};
    const PlanarCoords c{{0.0, 0.0, -1.0, 1.0}, {0.0, 1.0, 0.0, 0.0}, false};
    const auto p = petals_from_coords(ids, c, 4);
    CHECK(p.petals[0] == std::vector<std::string>{"o", "east"});
    CHECK(p.petals[1] == std::vector<std::string>{"o", "up"});
    CHECK(p.petals[2] == std::vector<std::string>{"o", "left"});
  }
}

TEST_CASE("petals are disjoint and cover every id") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto embs = random_embeddings(40 + seed, 6, seed);
    const std::size_t k = 1 + seed % 9;
    const auto p = assign_petal(embs, k);
    REQUIRE(p.petals.size() == k);
    std::multiset<std::string> seen;
    for (std::size_t j = 0; j < k; ++j) {
      REQUIRE(p.petals[j].front() == p.common);
      seen.insert(p.petals[j].begin() + 1, p.petals[j].end());
    }
    seen.insert(p.common);
    const auto ids = ids_of(embs);
    CHECK(seen == std::multiset<std::string>(ids.begin(), ids.end()));
  }
}

TEST_CASE("order_mcmc_loop") {
  AssignmentConfig cfg;
  SECTION("three points or fewer") {
    const std::vector<Point2> pts = {{0, 0}, {1, 0}, {0, 2}};
    const auto r = order_mcmc_loop(pts, cfg, 1);
    CHECK(r.order.size() == 3);
    CHECK(r.length == Catch::Approx(1 + 2 + std::sqrt(5.0)));
    CHECK(order_mcmc_loop(std::vector<Point2>{{3, 3}}, cfg, 1).order == std::vector<std::size_t>{0});
  }
  SECTION("unit square") {
    const std::vector<Point2> pts = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    for (std::uint64_t s = 0; s < 10; ++s) CHECK(order_mcmc_loop(pts, cfg, s).length == Catch::Approx(4.0));
  }
  SECTION("best length history never increases") {
    std::mt19937_64 rng(1);
    const auto pts = random_points(30, rng);
    cfg.mcmc_iterations = 5000;
    const auto r = order_mcmc_loop(pts, cfg, 3, true);
    REQUIRE(r.best_length_history.size() == 5000);
    for (std::size_t i = 1; i < r.best_length_history.size(); ++i)
      REQUIRE(r.best_length_history[i] <= r.best_length_history[i - 1]);
    CHECK(r.length == Catch::Approx(cycle_length(pts, r.order)));
    CHECK(r.order.front() == 0);
    auto sorted = r.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) REQUIRE(sorted[i] == i);
  }
  SECTION("deterministic per seed") {
    std::mt19937_64 rng(2);
    const auto pts = random_points(20, rng);
    CHECK(order_mcmc_loop(pts, cfg, 5).order == order_mcmc_loop(pts, cfg, 5).order);
  }
}

TEST_CASE("order_mcmc_loop is near-optimal on 8-point instances") {
  AssignmentConfig cfg;
  std::mt19937_64 rng(808);
  int good = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto pts = random_points(8, rng);
    good += order_mcmc_loop(pts, cfg, s).length <= 1.05 * tsp_optimum(pts);
  }
  CHECK(good >= 95);
}

TEST_CASE("build_assignment random baseline queue lengths") {
  const auto embs = random_embeddings(444, 6, 2);
  AssignmentConfig cfg;
  cfg.seed = 3;
  const auto a = build_assignment(embs, cfg);
  REQUIRE(a.graders.size() == 10);
  for (const auto& q : a.graders) {
    CHECK((q.entries.size() == 48 || q.entries.size() == 49));
    CHECK(std::count_if(q.entries.begin(), q.entries.end(), [](const auto& e) { return e.validation; }) == 5);
  }
  CHECK(build_assignment(embs, cfg) == a);
  CHECK(assignment_from_json(to_json(a)) == a);
}

TEST_CASE("every algorithm satisfies coverage invariants") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 12 + rng() % 80;
    auto embs = random_embeddings(n, 2 + rng() % 6, rng());
    AssignmentConfig cfg;
    cfg.n_validations = rng() % 6;
    cfg.n_graders = 1 + rng() % std::min<std::size_t>(10, n - cfg.n_validations);
    cfg.seed = rng();
    cfg.mcmc_iterations = 2000;
    cfg.algorithm = all_algorithms()[static_cast<std::size_t>(trial) % all_algorithms().size()];
    const auto a = build_assignment(embs, cfg);
    const auto split = select_validations(ids_of(embs), cfg.n_validations, cfg.seed);
    INFO(to_string(cfg.algorithm) << " n=" << n << " k=" << cfg.n_graders);
    CHECK(a.graders.size() == cfg.n_graders);
    CHECK(check_assignment(a, split.remaining, split.validation).empty());
    CHECK(build_assignment(embs, cfg) == a);
  }
}

TEST_CASE("check_assignment reports violations") {
  Assignment a;
  a.graders = {GraderQueue{{{"a", false}, {"v", true}}}, GraderQueue{{{"a", false}}}};
  const std::vector<std::string> regular = {"a", "b"}, validation = {"v"};
  const auto problems = check_assignment(a, regular, validation);
  CHECK(problems.size() >= 3);  // duplicate a, missing b, v missing from grader 1
}
