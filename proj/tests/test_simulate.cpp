#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "simgrade/simulate.hpp"
#include "support.hpp"

using namespace simgrade;
using namespace simgrade::simulate;
using assign::Assignment;
using assign::GraderQueue;
using assign::QueueEntry;
using embed::ProgramEmbedding;
using test_support::random_embeddings;

namespace {

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

Assignment single_queue(const std::vector<std::string>& ids) {
  Assignment a;
  GraderQueue q;
  for (const auto& id : ids) q.entries.push_back({id, false});
  a.graders.push_back(q);
  return a;
}

// Bundles of near-identical directions, so ordering matters.
std::vector<ProgramEmbedding> clustered(std::size_t n, std::size_t bundles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0), tight(0.0, 0.15);
  std::vector<std::vector<double>> centres(bundles, std::vector<double>(8));
  for (auto& c : centres)
    for (auto& x : c) x = g(rng);
  std::vector<ProgramEmbedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = centres[rng() % bundles];
    for (auto& x : v) x += tight(rng);
    out.push_back({test_support::id_of(i), v});
  }
  return out;
}

}  // namespace

TEST_CASE("predict_error calibration and clamping") {
  const ErrorModel m;
  CHECK(predict_error(1.0, m) == Catch::Approx(2.7).margin(1e-9));
  CHECK(predict_error(0.85, m) == Catch::Approx(10.2).margin(1e-9));
  CHECK(predict_error(52.7 / 50.0, m) == Catch::Approx(0.0).margin(1e-12));
  ErrorModel capped = m;
  capped.max_error = 50.0;
  CHECK(predict_error(-1.0, capped) == 50.0);
  CHECK(predict_error(-1.0, m) == 100.0);
}

TEST_CASE("predict_error is monotone and bounded") {
  const ErrorModel m;
  double prev = predict_error(-1.0, m);
  for (int i = -1000; i <= 1000; ++i) {
    const double e = predict_error(i / 1000.0, m);
    REQUIRE(e <= prev);
    REQUIRE(e >= m.min_error);
    REQUIRE(e <= m.max_error);
    prev = e;
  }
}

TEST_CASE("window_max_similarity") {
  SimulationConfig cfg;
  const std::vector<ProgramEmbedding> embs = {
      {"a", {1.0, 0.0}}, {"b", {0.0, 1.0}}, {"c", {1.0, 1.0}}, {"d", {1.0, 0.1}}, {"e", {1.0, 0.0}}};
  const auto sim = embed::pairwise_similarity(embs);
  const auto rows = iota_rows(5);
  CHECK(window_max_similarity(rows, 0, sim, cfg) == 0.80);
  CHECK(window_max_similarity(rows, 2, sim, cfg) == Catch::Approx(std::sqrt(0.5)));
  CHECK(window_max_similarity(rows, 4, sim, cfg) == Catch::Approx(sim.at(4, 3)));
  cfg.window = 4;
  CHECK(window_max_similarity(rows, 4, sim, cfg) == Catch::Approx(1.0));

  const std::vector<ProgramEmbedding> same(4, ProgramEmbedding{"x", {2.0, 1.0}});
  std::vector<ProgramEmbedding> named = same;
  for (std::size_t i = 0; i < 4; ++i) named[i].submission_id = "x" + std::to_string(i);
  CHECK(window_max_similarity(iota_rows(4), 3, embed::pairwise_similarity(named), SimulationConfig{}) ==
        Catch::Approx(1.0));
}

TEST_CASE("wider windows never lower the max similarity") {
  const auto embs = random_embeddings(40, 5, 6);
  const auto sim = embed::pairwise_similarity(embs);
  const auto rows = iota_rows(40);
  for (std::size_t w = 1; w < 8; ++w) {
    SimulationConfig narrow, wide;
    narrow.window = w;
    wide.window = w + 1;
    for (std::size_t p = 0; p < 40; ++p) REQUIRE(window_max_similarity(rows, p, sim, wide) >= window_max_similarity(rows, p, sim, narrow));
  }
}

TEST_CASE("simulate_session") {
  SimulationConfig cfg;
  SECTION("identical embeddings") {
    std::vector<ProgramEmbedding> embs;
    std::vector<std::string> ids;
    for (int i = 0; i < 6; ++i) {
      embs.push_back({"s" + std::to_string(i), {0.3, 0.4, 0.5}});
      ids.push_back(embs.back().submission_id);
    }
    const auto sim = embed::pairwise_similarity(embs);
    auto r = simulate_session(single_queue(ids), sim, cfg);
    CHECK(r.errors[0][0] == Catch::Approx(predict_error(cfg.cold_start_similarity, cfg.error_model)));
    for (std::size_t p = 1; p < 6; ++p) CHECK(r.errors[0][p] == Catch::Approx(2.7));
    cfg.cold_start_similarity = 1.0;
    r = simulate_session(single_queue(ids), sim, cfg);
    for (double e : r.errors[0]) CHECK(e == Catch::Approx(2.7));
    CHECK(r.mean_error == Catch::Approx(2.7));
  }
  SECTION("queue of one") {
    const std::vector<ProgramEmbedding> embs = {{"a", {1.0, 2.0}}};
    const auto r = simulate_session(single_queue({"a"}), embed::pairwise_similarity(embs), cfg);
    REQUIRE(r.errors[0].size() == 1);
    CHECK(r.errors[0][0] == Catch::Approx(12.7));
  }
  SECTION("mean of two positions") {
    const std::vector<ProgramEmbedding> embs = {{"a", {1.0, 0.0}}, {"b", {1.0, 1.0}}};
    const auto r = simulate_session(single_queue({"a", "b"}), embed::pairwise_similarity(embs), cfg);
    CHECK(r.mean_error == Catch::Approx((r.errors[0][0] + r.errors[0][1]) / 2));
  }
  SECTION("unknown submission") {
    const std::vector<ProgramEmbedding> embs = {{"a", {1.0, 0.0}}};
    REQUIRE_THROWS_CODE(simulate_session(single_queue({"a", "zz"}), embed::pairwise_similarity(embs), cfg),
                        ErrorCode::UnknownSubmissionInQueue);
  }
}

TEST_CASE("validation entries as window history") {
  const std::vector<ProgramEmbedding> embs = {{"r1", {1.0, 0.0}}, {"v", {0.0, 1.0}}, {"r2", {0.1, 1.0}}};
  const auto sim = embed::pairwise_similarity(embs);
  Assignment a;
  a.graders.push_back(GraderQueue{{{"r1", false}, {"v", true}, {"r2", false}}});
  SimulationConfig cfg;
  cfg.window = 1;
  const auto with = simulate_session(a, sim, cfg);
  CHECK(with.errors[0][2] == Catch::Approx(predict_error(sim.at(2, 1), cfg.error_model)));
  cfg.validation_history = false;
  const auto without = simulate_session(a, sim, cfg);
  CHECK(without.errors[0][1] == Catch::Approx(predict_error(sim.at(1, 0), cfg.error_model)));
  CHECK(without.errors[0][2] == Catch::Approx(predict_error(sim.at(2, 0), cfg.error_model)));
}

TEST_CASE("simulate_session is invariant under grader relabelling") {
  const auto embs = random_embeddings(60, 5, 12);
  const auto sim = embed::pairwise_similarity(embs);
  assign::AssignmentConfig acfg;
  acfg.algorithm = assign::Algorithm::Snake;
  acfg.n_graders = 6;
  auto a = assign::build_assignment(embs, acfg);
  const auto base = simulate_session(a, sim, SimulationConfig{});
  std::mt19937_64 rng(1);
  std::shuffle(a.graders.begin(), a.graders.end(), rng);
  const auto perm = simulate_session(a, sim, SimulationConfig{});
  CHECK(perm.mean_error == Catch::Approx(base.mean_error).epsilon(1e-12));
  CHECK(perm.validation_distance == Catch::Approx(base.validation_distance).epsilon(1e-12));
}

TEST_CASE("validation_distance") {
  const std::vector<ProgramEmbedding> embs = {
      {"r1", {1.0, 0.0}}, {"r2", {0.0, 1.0}}, {"r3", {1.0, 1.0}}, {"v1", {1.0, 0.0}}, {"v2", {-1.0, 1.0}}};
  const auto sim = embed::pairwise_similarity(embs);
  SECTION("identical validation contributes zero") {
    Assignment a;
    a.graders.push_back(GraderQueue{{{"r1", false}, {"v1", true}}});
    CHECK(validation_distance(a, sim) == 0.0);
  }
  SECTION("two-grader hand computation") {
    Assignment a;
    a.graders.push_back(GraderQueue{{{"r1", false}, {"v1", true}, {"v2", true}}});
    a.graders.push_back(GraderQueue{{{"r2", false}, {"r3", false}, {"v1", true}, {"v2", true}}});
    // Grader 0: v1 -> 0, v2 -> 1 - cos(135 deg). Grader 1: v1 -> 1 - cos(45 deg), v2 -> 1 - cos(45 deg).
    const double g0 = (0.0 + (1.0 + std::sqrt(0.5))) / 2.0;
    const double g1 = (1.0 - std::sqrt(0.5) + 1.0 - std::sqrt(0.5)) / 2.0;
    CHECK(validation_distance(a, sim) == Catch::Approx((g0 + g1) / 2.0).epsilon(1e-12));
  }
  SECTION("grader with only validations") {
    Assignment a;
    a.graders.push_back(GraderQueue{{{"r1", false}, {"v1", true}}});
    a.graders.push_back(GraderQueue{{{"v1", true}}});
    REQUIRE_THROWS_CODE(validation_distance(a, sim), ErrorCode::GraderHasNoRegularSubmissions);
    std::size_t skipped = 0;
    CHECK(validation_distance(a, sim, true, &skipped) == 0.0);
    CHECK(skipped == 1);
  }
}

TEST_CASE("validation_distance lies in [0, 2]") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto embs = random_embeddings(30, 3, seed);
    assign::AssignmentConfig acfg;
    acfg.n_graders = 3;
    acfg.seed = seed;
    const auto a = assign::build_assignment(embs, acfg);
    const double d = validation_distance(a, embed::pairwise_similarity(embs));
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
  }
}

TEST_CASE("compare_algorithms") {
  std::vector<Problem> problems = {{"p1", clustered(120, 6, 1)}, {"p2", clustered(120, 6, 2)}};
  ComparisonConfig cfg;
  cfg.n_repetitions = 4;
  cfg.bootstrap_trials = 2000;
  cfg.assignment.n_graders = 4;
  cfg.assignment.mcmc_iterations = 3000;
  cfg.assignment.seed = 5;

  SECTION("random alone has no p-value") {
    const std::vector<assign::Algorithm> algs = {assign::Algorithm::Random};
    const auto r = compare_algorithms(problems, algs, cfg);
    REQUIRE(r.rows.size() == 1);
    CHECK_FALSE(r.rows[0].p_vs_random.has_value());
    CHECK(to_csv(r).find("random,") != std::string::npos);
  }
  SECTION("shape, determinism and thread independence") {
    const auto& algs = assign::all_algorithms();
    const auto r1 = compare_algorithms(problems, algs, cfg);
    REQUIRE(r1.rows.size() == algs.size());
    CHECK(r1.rows[0].sessions.size() == 8);
    for (std::size_t a = 1; a < algs.size(); ++a) CHECK(r1.rows[a].p_vs_random.has_value());
    CHECK(to_csv(compare_algorithms(problems, algs, cfg)) == to_csv(r1));
    cfg.threads = 3;
    CHECK(to_json(compare_algorithms(problems, algs, cfg)).dump() == to_json(r1).dump());
    const auto csv = to_csv(r1);
    CHECK(csv.rfind("algorithm,mean_error_pct,validation_distance,p_vs_random,n_reps\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  }
  SECTION("similarity-aware ordering beats random on clustered data") {
    const std::vector<assign::Algorithm> algs = {assign::Algorithm::Random, assign::Algorithm::ClusterPath};
    const auto r = compare_algorithms(problems, algs, cfg);
    CHECK(r.rows[1].mean_error < r.rows[0].mean_error);
    CHECK(*r.rows[1].p_vs_random < 0.01);
  }
  SECTION("session means are the per-session average") {
    cfg.keep_position_errors = true;
    const std::vector<assign::Algorithm> algs = {assign::Algorithm::Snake};
    const auto r = compare_algorithms(problems, algs, cfg);
    double total = 0;
    std::size_t count = 0;
    for (const auto& s : r.rows[0].sessions) {
      double st = 0;
      std::size_t sc = 0;
      for (const auto& q : s.errors)
        for (double e : q) st += e, ++sc;
      CHECK(s.mean_error == Catch::Approx(st / sc));
      total += st;
      count += sc;
    }
    CHECK(r.rows[0].mean_error == Catch::Approx(total / count));
  }
}
