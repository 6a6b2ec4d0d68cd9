#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simgrade/codeprep.hpp"
#include "simgrade/json_io.hpp"

namespace simgrade::embed {

struct EmbedConfig {
  std::size_t dim = 50;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 10;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  // Throws InvalidArgument.
  void validate() const;
};

// Row-major |V| x dim matrix of token vectors.
class TokenEmbeddings {
 public:
  TokenEmbeddings() = default;
  TokenEmbeddings(codeprep::Vocab vocab, std::size_t dim, std::vector<float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return vocab_.size(); }
  const codeprep::Vocab& vocab() const noexcept { return vocab_; }
  const std::vector<float>& values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }

  friend bool operator==(const TokenEmbeddings& a, const TokenEmbeddings& b) {
    return a.dim_ == b.dim_ && a.values_ == b.values_ && a.vocab_.tokens() == b.vocab_.tokens() &&
           a.vocab_.counts() == b.vocab_.counts() && a.vocab_.min_count() == b.vocab_.min_count();
  }

 private:
  codeprep::Vocab vocab_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

struct ProgramEmbedding {
  std::string submission_id;
  std::vector<double> vector;

  friend bool operator==(const ProgramEmbedding&, const ProgramEmbedding&) = default;
};

// Negative-sampling objective for one (center, context) pair:
//   -log s(c.o) - sum_k log s(-n_k.c)
// with gradients for every participating row. negatives is k x dim row-major.
struct SgnsGradient {
  double loss = 0.0;
  std::vector<double> center;
  std::vector<double> context;
  std::vector<double> negatives;
};

SgnsGradient sgns_loss_and_gradient(std::span<const double> center, std::span<const double> context,
                                    std::span<const double> negatives);

// Skip-gram with negative sampling. Noise distribution is unigram^0.75.
// Single-threaded and bit-reproducible for a fixed seed.
// Throws EmptyCorpusAfterFilter.
TokenEmbeddings train_embeddings(std::span<const codeprep::TokenStream> streams, const codeprep::Vocab& vocab,
                                 const EmbedConfig& cfg);

// Mean of in-vocabulary token vectors. Throws NoKnownTokens.
ProgramEmbedding embed_program(const codeprep::TokenStream& stream, const TokenEmbeddings& emb);

// Throws ZeroVector / DimensionMismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// |A n B| / |A u B|; 1 when both are empty.
double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b);

class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<std::string> ids, std::vector<double> values);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * ids_.size() + j]; }
  // -1 when absent.
  std::ptrdiff_t index_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Symmetric cosine matrix with a unit diagonal. Throws ZeroVector / DimensionMismatch.
SimilarityMatrix pairwise_similarity(std::span<const ProgramEmbedding> embs);

// Binary layout (little-endian):
//   "SGEM" u32 version u32 n u32 dim
//   n*dim f32 row-major
//   n x (u32 byte length, UTF-8 token) in index order
//   u32 min_count, n x u64 token counts
void save_embeddings(const std::filesystem::path& path, const TokenEmbeddings& emb);
TokenEmbeddings load_embeddings(const std::filesystem::path& path);
// token,v0,...,v{dim-1}
void export_embeddings_csv(const std::filesystem::path& path, const TokenEmbeddings& emb);

Json to_json(const ProgramEmbedding& e);
void save_program_embeddings(const std::filesystem::path& path, std::span<const ProgramEmbedding> embs);
std::vector<ProgramEmbedding> load_program_embeddings(const std::filesystem::path& path);

}  // namespace simgrade::embed
