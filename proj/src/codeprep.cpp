#include "simgrade/codeprep.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "simgrade/error.hpp"

namespace simgrade::codeprep {

namespace {

bool is_quote(char c) { return c == '\'' || c == '"'; }

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

struct Literal {
  std::size_t begin;          // opening quote
  std::size_t end;            // one past the closing quote (or stop point if unterminated)
  std::size_t content_begin;
  std::size_t content_end;
};

// Scans a string literal starting at a quote character. Single-quoted
// literals stop at an unescaped newline when unterminated.
Literal scan_literal(std::string_view s, std::size_t pos) {
  const char q = s[pos];
  const bool triple = pos + 2 < s.size() && s[pos + 1] == q && s[pos + 2] == q;
  const std::size_t open = triple ? 3 : 1;
  std::size_t i = pos + open;
  while (i < s.size()) {
    char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      i += 2;
      continue;
    }
    if (!triple && c == '\n') return {pos, i, pos + open, i};
    if (c == q) {
      if (!triple) return {pos, i + 1, pos + open, i};
      if (i + 2 < s.size() && s[i + 1] == q && s[i + 2] == q) return {pos, i + 3, pos + open, i};
    }
    ++i;
  }
  return {pos, s.size(), pos + open, s.size()};
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string_view rtrim(std::string_view s) {
  auto end = s.find_last_not_of(" \t\r\f\v");
  return end == std::string_view::npos ? std::string_view{} : s.substr(0, end + 1);
}

constexpr std::array<std::string_view, 5> kThreeCharOps = {"**=", "//=", ">>=", "<<=", "..."};
constexpr std::array<std::string_view, 18> kTwoCharOps = {"==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=",
                                                          "&=", "|=", "^=", "//", "**", "->", "<<", ">>", ":="};

}  // namespace

Vocab::Vocab(std::vector<std::string> tokens, std::vector<std::uint64_t> counts, std::size_t min_count)
    : tokens_(std::move(tokens)), counts_(std::move(counts)), min_count_(min_count) {
  if (tokens_.size() != counts_.size()) throw Error(ErrorCode::InvalidArgument, "vocab tokens/counts size mismatch");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw Error(ErrorCode::DuplicateId, "vocab token " + tokens_[i]);
  }
}

std::ptrdiff_t Vocab::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::uint64_t Vocab::count(std::string_view token) const {
  auto i = index_of(token);
  return i < 0 ? 0 : counts_[static_cast<std::size_t>(i)];
}

std::string strip_comments(std::string_view source) {
  std::string out;
  out.reserve(source.size());
  std::size_t i = 0;
  while (i < source.size()) {
    char c = source[i];
    if (is_quote(c)) {
      auto lit = scan_literal(source, i);
      out.append(source.substr(i, lit.end - i));
      i = lit.end;
    } else if (c == '#') {
      while (i < source.size() && source[i] != '\n') ++i;
    } else {
      out.push_back(c);
      ++i;
    }
  }
  std::string trimmed;
  trimmed.reserve(out.size());
  auto lines = split_lines(out);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k) trimmed.push_back('\n');
    trimmed.append(rtrim(lines[k]));
  }
  return trimmed;
}

std::string mask_strings(std::string_view source, std::size_t max_len) {
  std::string out;
  out.reserve(source.size());
  std::size_t i = 0;
  while (i < source.size()) {
    if (is_quote(source[i])) {
      auto lit = scan_literal(source, i);
      auto content = source.substr(lit.content_begin, lit.content_end - lit.content_begin);
      if (utf8_length(content) > max_len) {
        out.append(kMaskedString);
      } else {
        out.append(source.substr(i, lit.end - i));
      }
      i = lit.end;
    } else {
      out.push_back(source[i++]);
    }
  }
  return out;
}

std::vector<std::string> lex(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (s.substr(i, kMaskedString.size()) == kMaskedString) {
      tokens.emplace_back(kMaskedString);
      i += kMaskedString.size();
    } else if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && is_ident_char(static_cast<unsigned char>(s[j]))) ++j;
      tokens.emplace_back(s.substr(i, j - i));
      i = j;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '.')) ++j;
      tokens.emplace_back(s.substr(i, j - i));
      i = j;
    } else if (is_quote(s[i])) {
      auto lit = scan_literal(s, i);
      tokens.emplace_back(s.substr(i, lit.end - i));
      i = lit.end;
    } else {
      std::size_t len = 1;
      if (std::any_of(kThreeCharOps.begin(), kThreeCharOps.end(), [&](auto op) { return s.substr(i, 3) == op; })) {
        len = 3;
      } else if (std::any_of(kTwoCharOps.begin(), kTwoCharOps.end(), [&](auto op) { return s.substr(i, 2) == op; })) {
        len = 2;
      }
      tokens.emplace_back(s.substr(i, len));
      i += len;
    }
  }
  return tokens;
}

std::string normalize_structure(std::string_view source) {
  std::vector<std::string> out;
  std::vector<std::size_t> levels{0};
  bool header_open = false;

  for (auto line : split_lines(source)) {
    std::size_t width = 0;
    std::size_t k = 0;
    for (; k < line.size() && (line[k] == ' ' || line[k] == '\t'); ++k) {
      width = line[k] == '\t' ? (width / 8 + 1) * 8 : width + 1;
    }
    auto body = rtrim(line.substr(k));
    if (body.empty()) continue;

    if (header_open) {
      header_open = false;
      if (width > levels.back()) {
        levels.push_back(width);
      } else {
        out.emplace_back("}");
      }
    }
    bool popped = false;
    while (width < levels.back()) {
      levels.pop_back();
      out.emplace_back("}");
      popped = true;
    }
    if (popped && width != levels.back()) {
      throw Error(ErrorCode::IndentationInconsistent,
                  "dedent to column " + std::to_string(width) + " matches no enclosing block");
    }

    auto tokens = lex(body);
    std::string text;
    for (const auto& t : tokens) {
      if (!text.empty()) text.push_back(' ');
      text += t;
    }
    if (!tokens.empty() && tokens.back() == ":") {
      text += " {";
      header_open = true;
    } else {
      text += " ;";
    }
    out.push_back(std::move(text));
  }
  if (header_open) out.emplace_back("}");
  for (std::size_t i = 1; i < levels.size(); ++i) out.emplace_back("}");

  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) joined.push_back('\n');
    joined += out[i];
  }
  return joined;
}

TokenStream tokenize(std::string_view source, std::string submission_id) {
  return TokenStream{std::move(submission_id), lex(source)};
}

TokenStream preprocess(std::string_view source, std::string submission_id, const PrepOptions& opts) {
  auto text = strip_comments(source);
  text = mask_strings(text, opts.max_string_len);
  text = normalize_structure(text);
  return tokenize(text, std::move(submission_id));
}

Vocab build_vocab(std::span<const TokenStream> streams, std::size_t min_count) {
  if (min_count < 1) throw Error(ErrorCode::InvalidArgument, "min_count must be >= 1");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : streams) {
    for (const auto& t : s.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  if (kept.empty()) {
    throw Error(ErrorCode::EmptyVocabulary, "no token occurs at least " + std::to_string(min_count) + " times");
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> ns;
  tokens.reserve(kept.size());
  ns.reserve(kept.size());
  for (auto& [t, n] : kept) {
    tokens.push_back(t);
    ns.push_back(n);
  }
  return Vocab(std::move(tokens), std::move(ns), min_count);
}

Json to_json(const TokenStream& stream) {
  Json j;
  j["submission_id"] = stream.submission_id;
  j["tokens"] = stream.tokens;
  return j;
}

void save_token_streams(const std::filesystem::path& path, std::span<const TokenStream> streams) {
  auto out = open_output(path);
  for (const auto& s : streams) out << to_json(s).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace simgrade::codeprep
