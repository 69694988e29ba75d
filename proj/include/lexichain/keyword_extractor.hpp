#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexichain/gateway.hpp"
#include "lexichain/prompts.hpp"
#include "lexichain/random.hpp"
#include "lexichain/sentence.hpp"

namespace lexichain {

/// Keyword selection strategy, one per ablation condition.
struct KeywordPolicy {
  enum class Kind { none, fixed, random, llm };

  Kind kind = Kind::llm;
  size_t k = 0;  // 0 with Kind::llm means adaptive
  uint64_t seed = 0;

  static KeywordPolicy none() { return {Kind::none, 0, 0}; }
  static KeywordPolicy fixed(size_t k) { return checked({Kind::fixed, k, 0}); }
  static KeywordPolicy random(size_t k, uint64_t seed) { return checked({Kind::random, k, seed}); }
  static KeywordPolicy llm_adaptive() { return {Kind::llm, 0, 0}; }
  static KeywordPolicy llm_fixed(size_t k) { return checked({Kind::llm, k, 0}); }

  /// Accepts none | fixed:K | random:K:SEED | llm | llm:K.
  static KeywordPolicy parse(std::string_view text) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
      const size_t colon = text.find(':', start);
      parts.emplace_back(text.substr(start, colon - start));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    auto number = [&](const std::string& s) -> uint64_t {
      uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(ErrorKind::config, "bad number '" + s + "' in keyword policy '" + std::string(text) + "'");
      }
      return v;
    };
    const std::string& name = parts[0];
    if (name == "none" && parts.size() == 1) return none();
    if (name == "fixed" && parts.size() == 2) return fixed(number(parts[1]));
    if (name == "random" && parts.size() == 3) return random(number(parts[1]), number(parts[2]));
    if (name == "llm" && parts.size() == 1) return llm_adaptive();
    if (name == "llm" && parts.size() == 2) return llm_fixed(number(parts[1]));
    fail(ErrorKind::config, "unknown keyword policy '" + std::string(text) + "'");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::fixed: return "fixed:" + std::to_string(k);
      case Kind::random: return "random:" + std::to_string(k) + ":" + std::to_string(seed);
      case Kind::llm: return k == 0 ? "llm" : "llm:" + std::to_string(k);
    }
    return "none";
  }

  bool operator==(const KeywordPolicy&) const = default;

 private:
  static KeywordPolicy checked(KeywordPolicy p) {
    if (p.k == 0) fail(ErrorKind::config, "keyword policy needs k >= 1");
    return p;
  }
};

/// What the scoring exchange produced, including the failures.
struct ScoringPromptResult {
  std::string raw_response;
  std::optional<PriorityScores> parsed;
  int attempts = 0;
};

inline constexpr int kScoringExtraAttempts = 2;

namespace detail {

inline std::string strip_code_fence(std::string s) {
  auto trim = [](std::string& t) {
    const auto b = t.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
      t.clear();
      return;
    }
    t = t.substr(b, t.find_last_not_of(" \t\r\n") - b + 1);
  };
  trim(s);
  if (s.rfind("```", 0) == 0) {
    const auto nl = s.find('\n');
    s = nl == std::string::npos ? std::string{} : s.substr(nl + 1);
    if (const auto close = s.rfind("```"); close != std::string::npos) s.erase(close);
    trim(s);
  }
  return s;
}

}  // namespace detail

/// Strict parse of an index -> score JSON object for `n` tokens. Keys must
/// be in-range decimal indices and values numbers; out-of-range numbers are
/// clamped into [0,1] and indices the model left out score 0.
inline std::optional<PriorityScores> parse_priority_scores(const std::string& response, size_t n) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::strip_code_fence(response));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!j.is_object()) return std::nullopt;
  std::vector<double> scores(n, 0.0);
  for (const auto& [key, value] : j.items()) {
    size_t index = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
    if (key.empty() || ec != std::errc{} || ptr != key.data() + key.size() || index >= n) return std::nullopt;
    if (!value.is_number()) return std::nullopt;
    scores[index] = std::clamp(value.get<double>(), 0.0, 1.0);
  }
  return PriorityScores(std::move(scores));
}

/// One scoring conversation with up to two corrective retries.
inline ScoringPromptResult request_scores(const SourceSentence& sentence, LlmBackend& llm) {
  if (sentence.size() == 0) fail(ErrorKind::invalid_input, "cannot score a sentence without tokens");
  ChatRequest req;
  req.purpose = "keywords";
  req.messages = {{Role::system, std::string(prompts::kAnalystSystem)},
                  {Role::user, prompts::keyword_scoring(sentence.src_lang(), sentence.tgt_lang(), sentence.tokens())}};
  ScoringPromptResult result;
  for (int attempt = 1; attempt <= 1 + kScoringExtraAttempts; ++attempt) {
    if (attempt > 1) {
      req.messages.push_back({Role::assistant, result.raw_response});
      req.messages.push_back({Role::user, prompts::keyword_reminder(sentence.size())});
    }
    result.raw_response = llm.complete(req).content;
    result.attempts = attempt;
    result.parsed = parse_priority_scores(result.raw_response, sentence.size());
    if (result.parsed) break;
  }
  return result;
}

/// LLM priority score per token. Throws extraction-failure when every
/// attempt came back malformed.
inline PriorityScores score_words(const SourceSentence& sentence, LlmBackend& llm) {
  ScoringPromptResult r = request_scores(sentence, llm);
  if (!r.parsed) {
    fail(ErrorKind::extraction_failure,
         "no parseable scores after " + std::to_string(r.attempts) + " attempts; last reply: " + r.raw_response);
  }
  return std::move(*r.parsed);
}

struct KeywordExtraction {
  KeywordSelection selection;
  std::optional<PriorityScores> scores;
  int attempts = 0;
  /// Set when scoring failed and the sentence fell back to no constraints.
  bool fell_back = false;
};

/// Draws k distinct indices from [0, n) with a partial Fisher-Yates shuffle
/// driven by mt19937_64, returned ascending.
inline std::vector<size_t> sample_indices(size_t n, size_t k, uint64_t seed) {
  std::vector<size_t> pool(n);
  for (size_t i = 0; i < n; ++i) pool[i] = i;
  std::mt19937_64 rng(seed);
  k = std::min(k, n);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(uniform_index(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline KeywordExtraction extract_keywords(const SourceSentence& sentence, const KeywordPolicy& policy,
                                          LlmBackend& llm) {
  KeywordExtraction out;
  const auto& tokens = sentence.tokens();
  auto take = [&](const std::vector<size_t>& indices, size_t k) {
    out.selection.k = k;
    for (size_t i : indices) out.selection.keywords.push_back({i, tokens[i]});
  };
  switch (policy.kind) {
    case KeywordPolicy::Kind::none:
      break;
    case KeywordPolicy::Kind::fixed: {
      std::vector<size_t> first(std::min(policy.k, tokens.size()));
      for (size_t i = 0; i < first.size(); ++i) first[i] = i;
      take(first, policy.k);
      break;
    }
    case KeywordPolicy::Kind::random:
      take(sample_indices(tokens.size(), policy.k, policy.seed), policy.k);
      break;
    case KeywordPolicy::Kind::llm: {
      if (tokens.empty()) break;
      ScoringPromptResult r = request_scores(sentence, llm);
      out.attempts = r.attempts;
      if (!r.parsed) {
        out.fell_back = true;
        break;
      }
      const size_t k = policy.k == 0 ? adaptive_k(tokens.size()) : policy.k;
      out.selection = select_top_k(sentence, *r.parsed, k);
      out.scores = std::move(r.parsed);
      break;
    }
  }
  return out;
}

}  // namespace lexichain
