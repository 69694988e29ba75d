#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexichain/error.hpp"
#include "lexichain/unicode.hpp"

namespace lexichain {

/// Splits on Unicode whitespace and trims leading/trailing punctuation and
/// symbol characters from each piece. Pieces that become empty are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const std::u32string cps = unicode::decode(text);
  size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::is_whitespace(cps[i])) ++i;
    size_t begin = i;
    while (i < cps.size() && !unicode::is_whitespace(cps[i])) ++i;
    size_t end = i;
    while (begin < end && unicode::is_punct_or_symbol(cps[begin])) ++begin;
    while (end > begin && unicode::is_punct_or_symbol(cps[end - 1])) --end;
    if (begin < end) tokens.push_back(unicode::encode(std::u32string_view(cps).substr(begin, end - begin)));
  }
  return tokens;
}

/// A source sentence with its word tokens and language pair.
class SourceSentence {
 public:
  SourceSentence(std::string text, std::string src_lang, std::string tgt_lang)
      : text_(std::move(text)),
        tokens_(tokenize(text_)),
        src_lang_(std::move(src_lang)),
        tgt_lang_(std::move(tgt_lang)) {
    if (src_lang_ == tgt_lang_) {
      fail(ErrorKind::invalid_input, "source and target language are both '" + src_lang_ + "'");
    }
  }

  const std::string& text() const { return text_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }
  size_t size() const { return tokens_.size(); }

 private:
  std::string text_;
  std::vector<std::string> tokens_;
  std::string src_lang_;
  std::string tgt_lang_;
};

/// One importance score in [0,1] per token.
class PriorityScores {
 public:
  PriorityScores() = default;
  explicit PriorityScores(std::vector<double> scores) : scores_(std::move(scores)) {
    for (double s : scores_) {
      if (!(s >= 0.0 && s <= 1.0)) fail(ErrorKind::invalid_input, "priority score outside [0,1]");
    }
  }

  std::span<const double> values() const { return scores_; }
  size_t size() const { return scores_.size(); }
  double operator[](size_t i) const { return scores_[i]; }

 private:
  std::vector<double> scores_;
};

struct Keyword {
  size_t token_index = 0;
  std::string word;

  bool operator==(const Keyword&) const = default;
};

/// Selected keywords in sentence order. `k` is the requested count; it is 0
/// for the unconstrained policy.
struct KeywordSelection {
  size_t k = 0;
  std::vector<Keyword> keywords;

  bool empty() const { return keywords.empty(); }
};

/// Sentence-length dependent keyword budget: max(1, min(8, ceil(n/5))).
inline size_t adaptive_k(size_t n) {
  if (n == 0) fail(ErrorKind::invalid_input, "adaptive_k requires at least one token");
  const size_t k = (n + 4) / 5;
  return std::clamp<size_t>(k, 1, 8);
}

/// The k highest-scoring tokens, ties broken by smaller token index,
/// returned in sentence order.
inline KeywordSelection select_top_k(const SourceSentence& sentence, const PriorityScores& scores, size_t k) {
  if (k == 0) fail(ErrorKind::invalid_input, "select_top_k requires k >= 1");
  if (scores.size() != sentence.size()) {
    fail(ErrorKind::invalid_input, "score count " + std::to_string(scores.size()) + " does not match token count " +
                                       std::to_string(sentence.size()));
  }
  std::vector<size_t> order(sentence.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());

  KeywordSelection selection{k, {}};
  selection.keywords.reserve(order.size());
  for (size_t i : order) selection.keywords.push_back({i, sentence.tokens()[i]});
  return selection;
}

}  // namespace lexichain
