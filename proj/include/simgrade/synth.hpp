#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "simgrade/embed.hpp"
#include "simgrade/json_io.hpp"

namespace simgrade::synth {

struct Symbol {
  enum class Kind { Terminal, Nonterminal };
  Kind kind = Kind::Terminal;
  std::string text;  // terminal text or nonterminal name

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production {
  double weight = 1.0;
  std::vector<Symbol> body;
  std::set<std::string> labels;
};

struct Grammar {
  std::string start;
  std::size_t max_depth = 64;
  std::map<std::string, std::vector<Production>> rules;

  std::set<std::string> all_labels() const;
};

struct LabeledProgram {
  std::string source_text;
  std::set<std::string> labels;

  friend bool operator==(const LabeledProgram&, const LabeledProgram&) = default;
};

// Throws MissingStart, UndefinedNonterminal, NonPositiveWeight, MalformedRecord.
Grammar parse_grammar(const Json& doc);
Grammar load_grammar(const std::filesystem::path& path);
void validate_grammar(const Grammar& g);

// Top-down weighted expansion. Throws DepthExceeded past g.max_depth.
LabeledProgram sample_program(const Grammar& g, std::uint64_t seed);

struct DerivationCount {
  std::uint64_t value = 0;
  bool overflow = false;  // true when the count exceeds 2^63 - 1
};

// Number of distinct derivations from the start symbol. Throws DepthExceeded
// on recursive grammars.
DerivationCount count_distinct(const Grammar& g);

struct SemanticPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double cosine = 0.0;
  double jaccard = 0.0;
};

struct SemanticFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_pairs = 0;
  bool exhaustive = false;  // all C(n,2) pairs were used
  std::vector<std::string> flags;  // e.g. ZeroVarianceX, ZeroVarianceY
  std::vector<SemanticPair> pairs;
};

// Samples n_pairs distinct unordered index pairs (all pairs when fewer exist)
// and fits jaccard = intercept + slope * cosine by least squares.
// Throws TooFewPrograms / DimensionMismatch.
SemanticFit evaluate_semantics(std::span<const LabeledProgram> programs,
                               std::span<const embed::ProgramEmbedding> embs, std::size_t n_pairs,
                               std::uint64_t seed);

Json to_json(const SemanticFit& fit);

}  // namespace simgrade::synth
