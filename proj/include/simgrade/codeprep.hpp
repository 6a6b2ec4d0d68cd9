#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "simgrade/json_io.hpp"

namespace simgrade::codeprep {

inline constexpr std::string_view kMaskedString = "<STR>";

struct TokenStream {
  std::string submission_id;
  std::vector<std::string> tokens;

  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

class Vocab {
 public:
  Vocab() = default;
  // tokens in index order; counts aligned with tokens.
  Vocab(std::vector<std::string> tokens, std::vector<std::uint64_t> counts, std::size_t min_count);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t min_count() const noexcept { return min_count_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  // -1 when absent.
  std::ptrdiff_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token) >= 0; }
  std::uint64_t count(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t min_count_ = 1;
};

struct PrepOptions {
  std::size_t max_string_len = 15;
};

// Removes `#` comments outside string literals and trailing whitespace.
// The number of lines is unchanged.
std::string strip_comments(std::string_view source);

// Ends each statement line with " ;", opens "{" after `:`-terminated
// headers followed by an indented block and closes "}" on dedent. Lines are
// re-emitted as space-separated tokens without indentation.
// Throws IndentationInconsistent.
std::string normalize_structure(std::string_view source);

// Replaces string literals whose content exceeds max_len code points with <STR>.
std::string mask_strings(std::string_view source, std::size_t max_len);

// Lexes identifiers, numerals, string literals, multi-character operators
// (maximal munch), single punctuation characters and <STR>.
std::vector<std::string> lex(std::string_view source);
TokenStream tokenize(std::string_view source, std::string submission_id = {});

// strip_comments -> mask_strings -> normalize_structure -> tokenize.
TokenStream preprocess(std::string_view source, std::string submission_id, const PrepOptions& opts = {});

// Tokens with total count >= min_count, indexed by descending count then
// lexicographically. Throws EmptyVocabulary / InvalidArgument.
Vocab build_vocab(std::span<const TokenStream> streams, std::size_t min_count = 5);

Json to_json(const TokenStream& stream);
void save_token_streams(const std::filesystem::path& path, std::span<const TokenStream> streams);

}  // namespace simgrade::codeprep
