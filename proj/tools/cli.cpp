#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "simgrade/corpus.hpp"
#include "simgrade/error.hpp"
#include "simgrade/random.hpp"
#include "simgrade/stats.hpp"
#include "simgrade/synth.hpp"

namespace simgrade::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
void take(const Json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) field = it->get<T>();
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  auto it = j.find(key);
  return it != j.end() && it->is_object() ? *it : empty;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

Json provenance(const std::string& command, const RunConfig& cfg) {
  Json p;
  p["tool"] = "simgrade";
  p["version"] = kToolVersion;
  p["command"] = command;
  p["run_config"] = to_json(cfg);
  return p;
}

fs::path out_dir(const RunConfig& cfg) {
  if (cfg.out.empty()) throw CLI::RequiredError("--out");
  return fs::path(cfg.out);
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

void write_run_config(const fs::path& dir, const std::string& command, const RunConfig& cfg) {
  write_json(dir / "run_config.json", provenance(command, cfg));
}

const std::string& single_programs(const RunConfig& cfg) {
  if (cfg.programs.size() != 1) throw CLI::ValidationError("--programs", "exactly one programs file is required");
  return cfg.programs.front();
}

std::string pad(std::size_t i, std::size_t width) {
  std::string s = std::to_string(i);
  return s.size() >= width ? s : std::string(width - s.size(), '0') + s;
}

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  if (cfg.grammar.empty()) throw CLI::RequiredError("--grammar");
  const auto dir = out_dir(cfg);
  const auto grammar = synth::load_grammar(cfg.grammar);
  corpus::SubmissionSet set;
  set.problem_id = cfg.problem_id;
  std::ostringstream labels;
  for (std::size_t i = 0; i < cfg.n_programs; ++i) {
    auto program = synth::sample_program(grammar, derive_seed(cfg.seed, {i}));
    corpus::Submission s{cfg.problem_id + "-s" + pad(i, 5), cfg.problem_id, std::nullopt, std::move(program.source_text)};
    Json lj;
    lj["submission_id"] = s.id;
    lj["labels"] = program.labels;
    labels << lj.dump() << '\n';
    set.submissions.push_back(std::move(s));
  }
  corpus::save_submissions(dir / "submissions.jsonl", set);
  write_text_file(dir / "labels.jsonl", labels.str());
  write_run_config(dir, "synth", cfg);
  out << "wrote " << cfg.n_programs << " programs to " << (dir / "submissions.jsonl").string() << '\n';
}

void cmd_embed(const RunConfig& cfg, std::ostream& out) {
  if (cfg.submissions.empty()) throw CLI::RequiredError("--submissions");
  const auto dir = out_dir(cfg);
  const auto subs = corpus::load_submissions(cfg.submissions);
  std::vector<codeprep::TokenStream> streams;
  streams.reserve(subs.size());
  for (const auto& s : subs.submissions) streams.push_back(codeprep::preprocess(s.source_text, s.id, cfg.prep));
  const auto vocab = codeprep::build_vocab(streams, cfg.min_count);
  auto ecfg = cfg.embed;
  ecfg.seed = cfg.seed;
  const auto emb = embed::train_embeddings(streams, vocab, ecfg);
  std::vector<embed::ProgramEmbedding> programs;
  programs.reserve(streams.size());
  for (const auto& s : streams) programs.push_back(embed::embed_program(s, emb));

  embed::save_embeddings(dir / "embeddings.sgem", emb);
  embed::export_embeddings_csv(dir / "embeddings.csv", emb);
  embed::save_program_embeddings(dir / "programs.jsonl", programs);
  codeprep::save_token_streams(dir / "tokens.jsonl", streams);
  write_run_config(dir, "embed", cfg);
  out << "vocabulary " << vocab.size() << " tokens, " << programs.size() << " program embeddings in "
      << dir.string() << '\n';
}

void cmd_assign(const RunConfig& cfg, std::ostream& out) {
  const auto dir = out_dir(cfg);
  const auto embs = embed::load_program_embeddings(single_programs(cfg));
  auto acfg = cfg.assignment;
  acfg.algorithm = assign::parse_algorithm(cfg.algorithm);
  acfg.seed = cfg.seed;
  const auto a = assign::build_assignment(embs, acfg);
  auto j = assign::to_json(a);
  j["provenance"] = provenance("assign", cfg);
  write_json(dir / "assignment.json", j);
  write_run_config(dir, "assign", cfg);
  out << "assigned " << embs.size() << " submissions to " << a.graders.size() << " graders ("
      << assign::to_string(a.algorithm) << ")\n";
}

void cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto dir = out_dir(cfg);
  auto scfg = cfg.simulation;
  scfg.seed = cfg.seed;
  if (!cfg.assignment_file.empty()) {
    const auto a = assign::assignment_from_json(read_json_file(cfg.assignment_file));
    const auto embs = embed::load_program_embeddings(single_programs(cfg));
    const auto result = simulate::simulate_session(a, embed::pairwise_similarity(embs), scfg);
    auto j = simulate::to_json(result);
    j["provenance"] = provenance("simulate", cfg);
    write_json(dir / "simulation.json", j);
    write_run_config(dir, "simulate", cfg);
    out << "mean error " << num(result.mean_error) << "%\n";
    return;
  }
  if (cfg.programs.empty()) throw CLI::RequiredError("--programs");
  std::vector<simulate::Problem> problems;
  for (const auto& p : cfg.programs) problems.push_back({p, embed::load_program_embeddings(p)});
  std::vector<assign::Algorithm> algorithms;
  for (const auto& name : cfg.algorithms) algorithms.push_back(assign::parse_algorithm(name));

  simulate::ComparisonConfig ccfg;
  ccfg.assignment = cfg.assignment;
  ccfg.assignment.seed = cfg.seed;
  ccfg.simulation = scfg;
  ccfg.n_repetitions = cfg.n_repetitions;
  ccfg.bootstrap_trials = cfg.bootstrap_trials;
  ccfg.threads = cfg.threads;
  const auto report = simulate::compare_algorithms(problems, algorithms, ccfg);

  write_text_file(dir / "comparison.csv", simulate::to_csv(report));
  auto j = simulate::to_json(report);
  j["provenance"] = provenance("simulate", cfg);
  write_json(dir / "comparison.json", j);
  write_run_config(dir, "simulate", cfg);
  out << simulate::to_csv(report);
}

void cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  if (cfg.logs.empty()) throw CLI::RequiredError("--logs");
  const auto dir = out_dir(cfg);
  const auto logs = corpus::load_grading_logs(cfg.logs);
  const auto report = stats::grader_error_analysis(logs);

  Json j;
  j["n_validation_entries"] = report.n_entries;
  j["rmse"] = report.rmse;
  j["fit_assigned_on_true"] = report.fit ? stats::to_json(*report.fit) : Json(nullptr);
  j["graders"] = Json::array();
  std::ostringstream graders_csv;
  graders_csv << "grader_id,n_validations,mean_abs_pct_error\n";
  for (const auto& g : report.graders) {
    Json gj;
    gj["grader_id"] = g.grader_id;
    gj["n_validations"] = g.n_validations;
    gj["mean_abs_pct_error"] = g.mean_abs_pct_error;
    j["graders"].push_back(std::move(gj));
    graders_csv << csv_field(g.grader_id) << ',' << g.n_validations << ',' << num(g.mean_abs_pct_error) << '\n';
  }
  write_text_file(dir / "grader_errors.csv", graders_csv.str());

  if (!cfg.programs.empty()) {
    std::vector<embed::ProgramEmbedding> embs;
    for (const auto& p : cfg.programs) {
      auto part = embed::load_program_embeddings(p);
      embs.insert(embs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    const auto wa = stats::window_similarity_analysis(logs, embs, cfg.simulation.window, cfg.simulation.validation_history);
    Json wj;
    wj["window"] = wa.window;
    wj["n_pairs"] = wa.pairs.size();
    wj["fit_error_on_similarity"] = wa.fit ? stats::to_json(*wa.fit) : Json(nullptr);
    j["window_analysis"] = std::move(wj);
    std::ostringstream pairs_csv;
    pairs_csv << "grader_id,submission_id,timestamp_ms,max_similarity,pct_error\n";
    for (const auto& p : wa.pairs) {
      pairs_csv << csv_field(p.grader_id) << ',' << csv_field(p.submission_id) << ',' << p.timestamp_ms << ','
                << num(p.max_similarity) << ',' << num(p.pct_error) << '\n';
    }
    write_text_file(dir / "window_pairs.csv", pairs_csv.str());
  }
  j["provenance"] = provenance("analyze", cfg);
  write_json(dir / "analysis.json", j);
  write_run_config(dir, "analyze", cfg);
  out << "rmse " << num(report.rmse) << " over " << report.n_entries << " validation entries\n";
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  if (cfg.labels.empty()) throw CLI::RequiredError("--labels");
  const auto dir = out_dir(cfg);
  std::map<std::string, std::set<std::string>> labels;
  for_each_jsonl(cfg.labels, [&](const Json& r, std::size_t) {
    auto& set = labels[r.at("submission_id").get<std::string>()];
    for (const auto& l : r.at("labels")) set.insert(l.get<std::string>());
  });
  const auto embs = embed::load_program_embeddings(single_programs(cfg));
  std::vector<synth::LabeledProgram> programs;
  programs.reserve(embs.size());
  for (const auto& e : embs) {
    auto it = labels.find(e.submission_id);
    if (it == labels.end()) throw Error(ErrorCode::MissingEmbedding, "no labels for " + e.submission_id);
    programs.push_back({e.submission_id, it->second});
  }
  const auto fit = synth::evaluate_semantics(programs, embs, cfg.n_pairs, cfg.seed);
  auto j = synth::to_json(fit);
  if (fit.flags.empty()) {
    std::vector<double> xs, ys;
    for (const auto& p : fit.pairs) {
      xs.push_back(p.cosine);
      ys.push_back(p.jaccard);
    }
    const auto boot = stats::bootstrap_slope_test(xs, ys, cfg.semantic_bootstrap_trials, derive_seed(cfg.seed, {0x51}));
    j["slope_p_value"] = boot.p_value;
    j["bootstrap_trials"] = boot.n_trials;
  } else {
    j["slope_p_value"] = nullptr;
  }
  j["provenance"] = provenance("report", cfg);
  write_json(dir / "semantic_fit.json", j);

  std::ostringstream csv;
  csv << "submission_a,submission_b,cosine,jaccard\n";
  for (const auto& p : fit.pairs) {
    csv << csv_field(embs[p.i].submission_id) << ',' << csv_field(embs[p.j].submission_id) << ',' << num(p.cosine)
        << ',' << num(p.jaccard) << '\n';
  }
  write_text_file(dir / "semantic_pairs.csv", csv.str());
  write_run_config(dir, "report", cfg);
  out << "slope " << num(fit.slope) << " r2 " << num(fit.r2) << " over " << fit.n_pairs << " pairs\n";
}

std::vector<std::string> algorithm_names() {
  std::vector<std::string> names;
  for (auto a : assign::all_algorithms()) names.emplace_back(assign::to_string(a));
  return names;
}

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["programs"] = c.programs;
  j["out"] = c.out;
  j["synth"] = {{"grammar", c.grammar}, {"n_programs", c.n_programs}, {"problem_id", c.problem_id}};
  j["embed"] = {{"submissions", c.submissions},
                {"min_count", c.min_count},
                {"max_string_len", c.prep.max_string_len},
                {"dim", c.embed.dim},
                {"window", c.embed.window},
                {"negatives", c.embed.negatives},
                {"epochs", c.embed.epochs},
                {"learning_rate", c.embed.learning_rate}};
  j["assign"] = {{"algorithm", c.algorithm},
                 {"n_graders", c.assignment.n_graders},
                 {"n_validations", c.assignment.n_validations},
                 {"mcmc_iterations", c.assignment.mcmc_iterations},
                 {"mcmc_initial_temp", c.assignment.mcmc_initial_temp},
                 {"mcmc_cooling", c.assignment.mcmc_cooling},
                 {"kmeans_max_iters", c.assignment.kmeans_max_iters}};
  const auto& m = c.simulation.error_model;
  j["simulate"] = {{"assignment_file", c.assignment_file},
                   {"algorithms", c.algorithms},
                   {"n_repetitions", c.n_repetitions},
                   {"bootstrap_trials", c.bootstrap_trials},
                   {"window", c.simulation.window},
                   {"cold_start_similarity", c.simulation.cold_start_similarity},
                   {"validation_history", c.simulation.validation_history},
                   {"error_model",
                    {{"intercept", m.intercept}, {"slope", m.slope}, {"min_error", m.min_error}, {"max_error", m.max_error}}}};
  j["analyze"] = {{"logs", c.logs}};
  j["report"] = {{"labels", c.labels}, {"n_pairs", c.n_pairs}, {"bootstrap_trials", c.semantic_bootstrap_trials}};
  return j;
}

void merge_json(RunConfig& c, const Json& j) {
  try {
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
    take(j, "programs", c.programs);
    take(j, "out", c.out);
    const auto& s = section(j, "synth");
    take(s, "grammar", c.grammar);
    take(s, "n_programs", c.n_programs);
    take(s, "problem_id", c.problem_id);
    const auto& e = section(j, "embed");
    take(e, "submissions", c.submissions);
    take(e, "min_count", c.min_count);
    take(e, "max_string_len", c.prep.max_string_len);
    take(e, "dim", c.embed.dim);
    take(e, "window", c.embed.window);
    take(e, "negatives", c.embed.negatives);
    take(e, "epochs", c.embed.epochs);
    take(e, "learning_rate", c.embed.learning_rate);
    const auto& a = section(j, "assign");
    take(a, "algorithm", c.algorithm);
    take(a, "n_graders", c.assignment.n_graders);
    take(a, "n_validations", c.assignment.n_validations);
    take(a, "mcmc_iterations", c.assignment.mcmc_iterations);
    take(a, "mcmc_initial_temp", c.assignment.mcmc_initial_temp);
    take(a, "mcmc_cooling", c.assignment.mcmc_cooling);
    take(a, "kmeans_max_iters", c.assignment.kmeans_max_iters);
    const auto& sim = section(j, "simulate");
    take(sim, "assignment_file", c.assignment_file);
    take(sim, "algorithms", c.algorithms);
    take(sim, "n_repetitions", c.n_repetitions);
    take(sim, "bootstrap_trials", c.bootstrap_trials);
    take(sim, "window", c.simulation.window);
    take(sim, "cold_start_similarity", c.simulation.cold_start_similarity);
    take(sim, "validation_history", c.simulation.validation_history);
    const auto& m = section(sim, "error_model");
    take(m, "intercept", c.simulation.error_model.intercept);
    take(m, "slope", c.simulation.error_model.slope);
    take(m, "min_error", c.simulation.error_model.min_error);
    take(m, "max_error", c.simulation.error_model.max_error);
    take(section(j, "analyze"), "logs", c.logs);
    const auto& r = section(j, "report");
    take(r, "labels", c.labels);
    take(r, "n_pairs", c.n_pairs);
    take(r, "bootstrap_trials", c.semantic_bootstrap_trials);
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::MalformedRecord, std::string("config: ") + ex.what());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string config_path;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
      if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    bool seed_in_file = false;
    if (!config_path.empty()) {
      const auto j = read_json_file(config_path);
      merge_json(cfg, j);
      seed_in_file = j.contains("seed");
    }
    if (const char* env = std::getenv("SIMGRADE_SEED"); env && !seed_in_file) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        err << "SIMGRADE_SEED is not an unsigned integer: " << env << '\n';
        return kUsage;
      }
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.is_io() ? kIo : kDomain;
  }

  CLI::App app{"simgrade: similarity-aware grading assignment toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override its values");
    sub->add_option("--seed", cfg.seed, "Random seed (falls back to SIMGRADE_SEED)");
    sub->add_option("--out", cfg.out, "Output directory");
  };

  auto* synth_cmd = app.add_subcommand("synth", "Sample labeled programs from a grammar");
  common(synth_cmd);
  synth_cmd->add_option("--grammar", cfg.grammar, "Grammar JSON file");
  synth_cmd->add_option("--n", cfg.n_programs, "Number of programs");
  synth_cmd->add_option("--problem-id", cfg.problem_id, "Problem id for the generated submissions");

  auto* embed_cmd = app.add_subcommand("embed", "Preprocess submissions and train token embeddings");
  common(embed_cmd);
  embed_cmd->add_option("--submissions", cfg.submissions, "submissions.jsonl");
  embed_cmd->add_option("--min-count", cfg.min_count, "Minimum token frequency")->check(CLI::PositiveNumber);
  embed_cmd->add_option("--max-string-len", cfg.prep.max_string_len, "Longer string literals become <STR>");
  embed_cmd->add_option("--dim", cfg.embed.dim, "Embedding dimension");
  embed_cmd->add_option("--window", cfg.embed.window, "Skip-gram context window");
  embed_cmd->add_option("--negatives", cfg.embed.negatives, "Negative samples per pair");
  embed_cmd->add_option("--epochs", cfg.embed.epochs, "Training epochs");
  embed_cmd->add_option("--lr", cfg.embed.learning_rate, "Initial learning rate");

  auto assignment_options = [&](CLI::App* sub) {
    sub->add_option("--graders,-k", cfg.assignment.n_graders, "Number of graders")->check(CLI::PositiveNumber);
    sub->add_option("--validations", cfg.assignment.n_validations, "Validation submissions per problem");
    sub->add_option("--mcmc-iterations", cfg.assignment.mcmc_iterations, "Annealing steps per petal loop");
    sub->add_option("--mcmc-initial-temp", cfg.assignment.mcmc_initial_temp, "Initial annealing temperature");
    sub->add_option("--mcmc-cooling", cfg.assignment.mcmc_cooling, "Geometric cooling factor")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--kmeans-max-iters", cfg.assignment.kmeans_max_iters, "k-means iteration cap");
  };
  auto simulation_options = [&](CLI::App* sub) {
    sub->add_option("--window", cfg.simulation.window, "Similarity window length")->check(CLI::PositiveNumber);
    sub->add_option("--cold-start", cfg.simulation.cold_start_similarity, "Similarity assumed at queue start")
        ->check(CLI::Range(-1.0, 1.0));
    sub->add_flag("!--exclude-validation-history", cfg.simulation.validation_history,
                  "Do not count validation entries as window history");
  };

  auto* assign_cmd = app.add_subcommand("assign", "Assign and order submissions for graders");
  common(assign_cmd);
  assign_cmd->add_option("--programs", cfg.programs, "programs.jsonl with program embeddings");
  assign_cmd->add_option("--algorithm", cfg.algorithm, "Assignment algorithm")->check(CLI::IsMember(algorithm_names()));
  assignment_options(assign_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Predict grading error for assignments");
  common(sim_cmd);
  sim_cmd->add_option("--programs", cfg.programs, "programs.jsonl per problem (repeatable)");
  sim_cmd->add_option("--assignment", cfg.assignment_file, "Simulate one assignment.json instead of comparing");
  sim_cmd->add_option("--algorithms", cfg.algorithms, "Comma-separated algorithms to compare")
      ->delimiter(',')
      ->check(CLI::IsMember(algorithm_names()));
  sim_cmd->add_option("--reps", cfg.n_repetitions, "Repetitions per problem")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--bootstrap-trials", cfg.bootstrap_trials, "Bootstrap trials for p-values")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--threads", cfg.threads, "Worker threads");
  sim_cmd->add_option("--intercept", cfg.simulation.error_model.intercept, "Error model intercept (percent)");
  sim_cmd->add_option("--slope", cfg.simulation.error_model.slope, "Error model slope (percent per unit similarity)");
  sim_cmd->add_option("--min-error", cfg.simulation.error_model.min_error, "Lower clamp (percent)");
  sim_cmd->add_option("--max-error", cfg.simulation.error_model.max_error, "Upper clamp (percent)");
  assignment_options(sim_cmd);
  simulation_options(sim_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "Grader accuracy analytics from grading logs");
  common(analyze_cmd);
  analyze_cmd->add_option("--logs", cfg.logs, "grading_logs.jsonl");
  analyze_cmd->add_option("--programs", cfg.programs, "programs.jsonl for the window analysis (repeatable)");
  simulation_options(analyze_cmd);

  auto* report_cmd = app.add_subcommand("report", "Embedding-vs-label semantic fit");
  common(report_cmd);
  report_cmd->add_option("--labels", cfg.labels, "labels.jsonl");
  report_cmd->add_option("--programs", cfg.programs, "programs.jsonl");
  report_cmd->add_option("--pairs", cfg.n_pairs, "Pairs to sample")->check(CLI::PositiveNumber);
  report_cmd->add_option("--bootstrap-trials", cfg.semantic_bootstrap_trials, "Bootstrap trials for the slope test")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (synth_cmd->parsed()) cmd_synth(cfg, out);
    if (embed_cmd->parsed()) cmd_embed(cfg, out);
    if (assign_cmd->parsed()) cmd_assign(cfg, out);
    if (sim_cmd->parsed()) cmd_simulate(cfg, out);
    if (analyze_cmd->parsed()) cmd_analyze(cfg, out);
    if (report_cmd->parsed()) cmd_report(cfg, out);
  } catch (const CLI::Error& e) {
    err << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.is_io() ? kIo : kDomain;
  } catch (const fs::filesystem_error& e) {
    err << e.what() << '\n';
    return kIo;
  }
  return kOk;
}

}  // namespace simgrade::cli
