#include "simgrade/embed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "simgrade/error.hpp"
#include "simgrade/random.hpp"

namespace simgrade::embed {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kFormatVersion = 1;

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

template <typename Real>
Real dot(const Real* a, const Real* b, std::size_t n) {
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Gradient of the pair objective. grad_* buffers are overwritten.
// The caller's negatives are rows of `out`, addressed by pointer.
template <typename Real>
void pair_gradient(const Real* center, const Real* context, std::span<const Real* const> negatives, std::size_t dim,
                   Real* grad_center, Real* grad_context, Real* grad_negatives) {
  std::fill(grad_center, grad_center + dim, Real(0));
  const Real gpos = sigmoid(dot(context, center, dim)) - Real(1);
  for (std::size_t d = 0; d < dim; ++d) {
    grad_center[d] += gpos * context[d];
    grad_context[d] = gpos * center[d];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const Real* neg = negatives[k];
    const Real gneg = sigmoid(dot(neg, center, dim));
    Real* gk = grad_negatives + k * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      grad_center[d] += gneg * neg[d];
      gk[d] = gneg * center[d];
    }
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint64_t get_le(std::istream& in, int bytes, const fs::path& path) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), bytes)) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": truncated embedding file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void EmbedConfig::validate() const {
  if (dim == 0 || window == 0 || negatives == 0 || epochs == 0) {
    throw Error(ErrorCode::InvalidArgument, "dim, window, negatives and epochs must be positive");
  }
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning_rate must lie in (0, 1)");
  }
}

TokenEmbeddings::TokenEmbeddings(codeprep::Vocab vocab, std::size_t dim, std::vector<float> values)
    : vocab_(std::move(vocab)), dim_(dim), values_(std::move(values)) {
  if (values_.size() != vocab_.size() * dim_) {
    throw Error(ErrorCode::DimensionMismatch, "embedding matrix does not match vocab size x dim");
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite embedding value");
  }
}

SgnsGradient sgns_loss_and_gradient(std::span<const double> center, std::span<const double> context,
                                    std::span<const double> negatives) {
  const std::size_t dim = center.size();
  if (context.size() != dim || negatives.size() % dim != 0) {
    throw Error(ErrorCode::DimensionMismatch, "sgns rows must share a dimension");
  }
  const std::size_t k = dim ? negatives.size() / dim : 0;
  std::vector<const double*> rows(k);
  for (std::size_t i = 0; i < k; ++i) rows[i] = negatives.data() + i * dim;

  SgnsGradient g;
  g.center.resize(dim);
  g.context.resize(dim);
  g.negatives.resize(k * dim);
  pair_gradient<double>(center.data(), context.data(), rows, dim, g.center.data(), g.context.data(),
                        g.negatives.data());
  g.loss = -log_sigmoid(dot(context.data(), center.data(), dim));
  for (std::size_t i = 0; i < k; ++i) g.loss -= log_sigmoid(-dot(rows[i], center.data(), dim));
  return g;
}

TokenEmbeddings train_embeddings(std::span<const codeprep::TokenStream> streams, const codeprep::Vocab& vocab,
                                 const EmbedConfig& cfg) {
  cfg.validate();
  const std::size_t n = vocab.size();
  const std::size_t dim = cfg.dim;

  std::vector<std::vector<std::uint32_t>> corpus;
  std::size_t total_tokens = 0;
  for (const auto& s : streams) {
    std::vector<std::uint32_t> seq;
    for (const auto& t : s.tokens) {
      auto idx = vocab.index_of(t);
      if (idx >= 0) seq.push_back(static_cast<std::uint32_t>(idx));
    }
    if (!seq.empty()) {
      total_tokens += seq.size();
      corpus.push_back(std::move(seq));
    }
  }
  if (corpus.empty() || n == 0) {
    throw Error(ErrorCode::EmptyCorpusAfterFilter, "no in-vocabulary tokens to train on");
  }

  std::vector<double> noise_cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(vocab.counts()[i]), 0.75);
    noise_cdf[i] = acc;
  }

  Rng rng(cfg.seed);
  std::vector<float> input(n * dim);
  std::vector<float> output(n * dim, 0.0f);
  for (auto& v : input) v = static_cast<float>((uniform_unit(rng) - 0.5) / static_cast<double>(dim));

  std::vector<float> grad_center(dim), grad_context(dim), grad_neg(cfg.negatives * dim);
  std::vector<std::uint32_t> neg_ids(cfg.negatives);
  std::vector<const float*> neg_rows(cfg.negatives);

  const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens);
  double step = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& seq : corpus) {
      for (std::size_t pos = 0; pos < seq.size(); ++pos, step += 1.0) {
        const float lr = static_cast<float>(cfg.learning_rate * std::max(1e-4, 1.0 - step / total_steps));
        const std::size_t reach = cfg.window - uniform_index(rng, cfg.window);
        const std::size_t lo = pos >= reach ? pos - reach : 0;
        const std::size_t hi = std::min(seq.size() - 1, pos + reach);
        float* center = input.data() + seq[pos] * dim;
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          const std::uint32_t ctx = seq[c];
          std::size_t k = 0;
          for (std::size_t draw = 0; draw < cfg.negatives; ++draw) {
            const double u = uniform_unit(rng) * acc;
            auto id = static_cast<std::uint32_t>(std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u) -
                                                 noise_cdf.begin());
            id = std::min<std::uint32_t>(id, static_cast<std::uint32_t>(n - 1));
            if (id == ctx) continue;
            neg_ids[k] = id;
            neg_rows[k] = output.data() + id * dim;
            ++k;
          }
          float* context = output.data() + ctx * dim;
          pair_gradient<float>(center, context, std::span<const float* const>(neg_rows.data(), k), dim,
                               grad_center.data(), grad_context.data(), grad_neg.data());
          for (std::size_t d = 0; d < dim; ++d) context[d] -= lr * grad_context[d];
          for (std::size_t j = 0; j < k; ++j) {
            float* row = output.data() + neg_ids[j] * dim;
            for (std::size_t d = 0; d < dim; ++d) row[d] -= lr * grad_neg[j * dim + d];
          }
          for (std::size_t d = 0; d < dim; ++d) center[d] -= lr * grad_center[d];
        }
      }
    }
  }
  return TokenEmbeddings(vocab, dim, std::move(input));
}

ProgramEmbedding embed_program(const codeprep::TokenStream& stream, const TokenEmbeddings& emb) {
  ProgramEmbedding out{stream.submission_id, std::vector<double>(emb.dim(), 0.0)};
  std::size_t known = 0;
  for (const auto& t : stream.tokens) {
    auto idx = emb.vocab().index_of(t);
    if (idx < 0) continue;
    auto row = emb.row(static_cast<std::size_t>(idx));
    for (std::size_t d = 0; d < row.size(); ++d) out.vector[d] += row[d];
    ++known;
  }
  if (known == 0) throw Error(ErrorCode::NoKnownTokens, stream.submission_id);
  bool all_zero = true;
  for (auto& v : out.vector) {
    v /= static_cast<double>(known);
    all_zero = all_zero && v == 0.0;
  }
  if (all_zero) throw Error(ErrorCode::ZeroVector, stream.submission_id);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "cosine of unequal-length vectors");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

double jaccard_similarity(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (values_.size() != ids_.size() * ids_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "similarity matrix must be n x n");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw Error(ErrorCode::DuplicateId, ids_[i]);
  }
}

std::ptrdiff_t SimilarityMatrix::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

SimilarityMatrix pairwise_similarity(std::span<const ProgramEmbedding> embs) {
  const std::size_t n = embs.size();
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& e : embs) ids.push_back(e.submission_id);
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (n > 0 && embs[i].vector.size() != embs[0].vector.size()) {
      throw Error(ErrorCode::DimensionMismatch, embs[i].submission_id);
    }
    values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(embs[i].vector, embs[j].vector);
      values[i * n + j] = s;
      values[j * n + i] = s;
    }
  }
  if (n == 1) cosine_similarity(embs[0].vector, embs[0].vector);
  return SimilarityMatrix(std::move(ids), std::move(values));
}

void save_embeddings(const fs::path& path, const TokenEmbeddings& emb) {
  auto out = open_output(path);
  out.write("SGEM", 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(emb.rows()));
  put_u32(out, static_cast<std::uint32_t>(emb.dim()));
  for (float v : emb.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  for (const auto& t : emb.vocab().tokens()) {
    put_u32(out, static_cast<std::uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  put_u32(out, static_cast<std::uint32_t>(emb.vocab().min_count()));
  for (auto c : emb.vocab().counts()) put_u64(out, c);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

TokenEmbeddings load_embeddings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!fs::exists(path) || !in) throw Error(ErrorCode::MissingFile, path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SGEM", 4) != 0) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": bad magic");
  }
  const auto version = get_le(in, 4, path);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto n = static_cast<std::size_t>(get_le(in, 4, path));
  const auto dim = static_cast<std::size_t>(get_le(in, 4, path));
  std::vector<float> values(n * dim);
  for (auto& v : values) v = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(in, 4, path)));
  std::vector<std::string> tokens(n);
  for (auto& t : tokens) {
    const auto len = static_cast<std::size_t>(get_le(in, 4, path));
    t.resize(len);
    if (!in.read(t.data(), static_cast<std::streamsize>(len))) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": truncated token table");
    }
  }
  const auto min_count = static_cast<std::size_t>(get_le(in, 4, path));
  std::vector<std::uint64_t> counts(n);
  for (auto& c : counts) c = get_le(in, 8, path);
  return TokenEmbeddings(codeprep::Vocab(std::move(tokens), std::move(counts), min_count), dim, std::move(values));
}

void export_embeddings_csv(const fs::path& path, const TokenEmbeddings& emb) {
  auto out = open_output(path);
  out << "token";
  for (std::size_t d = 0; d < emb.dim(); ++d) out << ",v" << d;
  out << '\n';
  out << std::setprecision(9);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    const auto& tok = emb.vocab().tokens()[i];
    if (tok.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char c : tok) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << tok;
    }
    for (float v : emb.row(i)) out << ',' << v;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

Json to_json(const ProgramEmbedding& e) {
  Json j;
  j["submission_id"] = e.submission_id;
  j["vector"] = e.vector;
  return j;
}

void save_program_embeddings(const fs::path& path, std::span<const ProgramEmbedding> embs) {
  auto out = open_output(path);
  for (const auto& e : embs) out << to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::vector<ProgramEmbedding> load_program_embeddings(const fs::path& path) {
  std::vector<ProgramEmbedding> embs;
  for_each_jsonl(path, [&](const Json& r, std::size_t) {
    embs.push_back({r.at("submission_id").get<std::string>(), r.at("vector").get<std::vector<double>>()});
  });
  return embs;
}

}  // namespace simgrade::embed
