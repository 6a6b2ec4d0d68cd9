#include "simgrade/synth.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "simgrade/error.hpp"
#include "simgrade/random.hpp"
#include "simgrade/stats.hpp"

namespace simgrade::synth {

namespace {

constexpr std::uint64_t kCountLimit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());

struct CountState {
  std::map<std::string, DerivationCount> done;
  std::unordered_set<std::string> active;
};

DerivationCount saturating_mul(DerivationCount a, DerivationCount b) {
  if (a.value == 0 || b.value == 0) return {0, false};
  if (a.overflow || b.overflow) return {kCountLimit, true};
  const unsigned __int128 p = static_cast<unsigned __int128>(a.value) * b.value;
  if (p > kCountLimit) return {kCountLimit, true};
  return {static_cast<std::uint64_t>(p), false};
}

DerivationCount saturating_add(DerivationCount a, DerivationCount b) {
  if (a.overflow || b.overflow) return {kCountLimit, true};
  const unsigned __int128 s = static_cast<unsigned __int128>(a.value) + b.value;
  if (s > kCountLimit) return {kCountLimit, true};
  return {static_cast<std::uint64_t>(s), false};
}

DerivationCount count_from(const Grammar& g, const std::string& nt, CountState& st) {
  if (auto it = st.done.find(nt); it != st.done.end()) return it->second;
  if (!st.active.insert(nt).second) {
    throw Error(ErrorCode::DepthExceeded, "recursive nonterminal '" + nt + "' has unbounded derivations");
  }
  DerivationCount total{0, false};
  for (const auto& p : g.rules.at(nt)) {
    DerivationCount prod{1, false};
    for (const auto& s : p.body) {
      if (s.kind == Symbol::Kind::Nonterminal) prod = saturating_mul(prod, count_from(g, s.text, st));
    }
    total = saturating_add(total, prod);
  }
  st.active.erase(nt);
  st.done.emplace(nt, total);
  return total;
}

}  // namespace

std::set<std::string> Grammar::all_labels() const {
  std::set<std::string> out;
  for (const auto& [nt, prods] : rules) {
    for (const auto& p : prods) out.insert(p.labels.begin(), p.labels.end());
  }
  return out;
}

void validate_grammar(const Grammar& g) {
  if (g.start.empty() || !g.rules.count(g.start)) throw Error(ErrorCode::MissingStart, "start symbol '" + g.start + "'");
  for (const auto& [nt, prods] : g.rules) {
    if (prods.empty()) throw Error(ErrorCode::MalformedRecord, "nonterminal '" + nt + "' has no productions");
    for (const auto& p : prods) {
      if (!(p.weight > 0.0)) throw Error(ErrorCode::NonPositiveWeight, "production of '" + nt + "'");
      if (p.body.empty() && p.labels.empty()) {
        throw Error(ErrorCode::MalformedRecord, "production of '" + nt + "' has neither body nor labels");
      }
      for (const auto& s : p.body) {
        if (s.kind == Symbol::Kind::Nonterminal && !g.rules.count(s.text)) {
          throw Error(ErrorCode::UndefinedNonterminal, s.text);
        }
      }
    }
  }
}

Grammar parse_grammar(const Json& doc) {
  Grammar g;
  try {
    if (!doc.contains("start")) throw Error(ErrorCode::MissingStart, "grammar has no 'start'");
    g.start = doc.at("start").get<std::string>();
    if (doc.contains("max_depth")) g.max_depth = doc.at("max_depth").get<std::size_t>();
    for (const auto& [nt, prods] : doc.at("rules").items()) {
      auto& list = g.rules[nt];
      for (const auto& pj : prods) {
        Production p;
        p.weight = pj.value("weight", 1.0);
        for (const auto& sj : pj.at("body")) {
          if (sj.contains("t")) {
            p.body.push_back({Symbol::Kind::Terminal, sj.at("t").get<std::string>()});
          } else if (sj.contains("nt")) {
            p.body.push_back({Symbol::Kind::Nonterminal, sj.at("nt").get<std::string>()});
          } else {
            throw Error(ErrorCode::MalformedRecord, "body symbol in '" + nt + "' needs 't' or 'nt'");
          }
        }
        if (pj.contains("labels")) {
          for (const auto& l : pj.at("labels")) p.labels.insert(l.get<std::string>());
        }
        list.push_back(std::move(p));
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("grammar: ") + e.what());
  }
  validate_grammar(g);
  return g;
}

Grammar load_grammar(const std::filesystem::path& path) { return parse_grammar(read_json_file(path)); }

LabeledProgram sample_program(const Grammar& g, std::uint64_t seed) {
  Rng rng(seed);
  LabeledProgram out;
  struct Frame {
    const Symbol* symbol;
    std::size_t depth;
  };
  const Symbol start{Symbol::Kind::Nonterminal, g.start};
  std::vector<Frame> stack{{&start, 1}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.symbol->kind == Symbol::Kind::Terminal) {
      out.source_text += f.symbol->text;
      continue;
    }
    if (f.depth > g.max_depth) {
      throw Error(ErrorCode::DepthExceeded, "expansion of '" + f.symbol->text + "' passed depth " +
                                                std::to_string(g.max_depth));
    }
    const auto& prods = g.rules.at(f.symbol->text);
    double total = 0.0;
    for (const auto& p : prods) total += p.weight;
    const double u = uniform_unit(rng) * total;
    std::size_t pick = prods.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < prods.size(); ++i) {
      acc += prods[i].weight;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    const auto& p = prods[pick];
    out.labels.insert(p.labels.begin(), p.labels.end());
    for (auto it = p.body.rbegin(); it != p.body.rend(); ++it) stack.push_back({&*it, f.depth + 1});
  }
  return out;
}

DerivationCount count_distinct(const Grammar& g) {
  validate_grammar(g);
  CountState st;
  return count_from(g, g.start, st);
}

SemanticFit evaluate_semantics(std::span<const LabeledProgram> programs,
                               std::span<const embed::ProgramEmbedding> embs, std::size_t n_pairs,
                               std::uint64_t seed) {
  const std::size_t n = programs.size();
  if (n < 2) throw Error(ErrorCode::TooFewPrograms, "need at least two programs, got " + std::to_string(n));
  if (embs.size() != n) throw Error(ErrorCode::DimensionMismatch, "programs and embeddings must align 1:1");
  if (n_pairs < 2 && n > 2) throw Error(ErrorCode::InvalidArgument, "n_pairs must be >= 2");

  const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::vector<std::uint64_t> chosen;
  SemanticFit fit;
  if (n_pairs >= total) {
    fit.exhaustive = true;
    chosen.resize(total);
    for (std::uint64_t p = 0; p < total; ++p) chosen[p] = p;
  } else {
    // Floyd's sampling of n_pairs distinct linear pair indices.
    Rng rng(seed);
    std::unordered_set<std::uint64_t> picked;
    picked.reserve(n_pairs * 2);
    for (std::uint64_t j = total - n_pairs; j < total; ++j) {
      const std::uint64_t t = uniform_index(rng, j + 1);
      picked.insert(picked.count(t) ? j : t);
    }
    chosen.assign(picked.begin(), picked.end());
    std::sort(chosen.begin(), chosen.end());
  }

  // Walk rows: row i owns linear indices [offset, offset + n - 1 - i).
  std::size_t row = 0;
  std::uint64_t offset = 0;
  std::vector<double> xs, ys;
  xs.reserve(chosen.size());
  ys.reserve(chosen.size());
  for (auto p : chosen) {
    while (p >= offset + (n - 1 - row)) {
      offset += n - 1 - row;
      ++row;
    }
    const std::size_t col = row + 1 + static_cast<std::size_t>(p - offset);
    SemanticPair pair{row, col, embed::cosine_similarity(embs[row].vector, embs[col].vector),
                      embed::jaccard_similarity(programs[row].labels, programs[col].labels)};
    xs.push_back(pair.cosine);
    ys.push_back(pair.jaccard);
    fit.pairs.push_back(pair);
  }
  fit.n_pairs = fit.pairs.size();

  const double xmin = *std::min_element(xs.begin(), xs.end());
  const double xmax = *std::max_element(xs.begin(), xs.end());
  if (fit.n_pairs < 2 || xmin == xmax) {
    fit.flags.push_back(fit.n_pairs < 2 ? "TooFewPairs" : "ZeroVarianceX");
    fit.intercept = stats::mean(ys);
  } else {
    const auto ols = stats::ols_fit(xs, ys);
    fit.slope = ols.slope;
    fit.intercept = ols.intercept;
    fit.r2 = ols.r2;
    if (!ols.r2_defined) fit.flags.push_back("ZeroVarianceY");
  }
  return fit;
}

Json to_json(const SemanticFit& fit) {
  Json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r2;
  j["n_pairs"] = fit.n_pairs;
  j["pair_sampling"] = fit.exhaustive ? "exhaustive" : "uniform_without_replacement";
  j["flags"] = fit.flags;
  return j;
}

}  // namespace simgrade::synth
