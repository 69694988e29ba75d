#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "lexichain/constraint.hpp"
#include "lexichain/constraint_verifier.hpp"
#include "lexichain/gateway.hpp"
#include "lexichain/prompts.hpp"
#include "lexichain/sentence.hpp"
#include "lexichain/unicode.hpp"

namespace lexichain {

inline constexpr int kDefaultMaxIters = 3;

/// One translation in the refinement sequence with its verifier verdicts.
struct TranslationDraft {
  std::string text;
  int iteration = 1;
  std::vector<bool> satisfied;
  bool all_satisfied = true;

  size_t satisfied_count() const { return static_cast<size_t>(std::count(satisfied.begin(), satisfied.end(), true)); }
};

enum class BestChoice { first, final };

inline std::string_view to_string(BestChoice b) { return b == BestChoice::first ? "first" : "final"; }

struct ChainDegradation {
  bool extraction_fallback = false;
  bool selection_fallback = false;
  /// A self-check call failed; the chain kept the drafts it already had.
  bool refinement_aborted = false;
  std::string detail;

  bool any() const { return extraction_fallback || selection_fallback || refinement_aborted; }
};

struct ChainResult {
  std::vector<TranslationDraft> drafts;
  BestChoice best = BestChoice::final;
  std::string best_text;
  ChainDegradation degraded;

  const TranslationDraft& first() const { return drafts.front(); }
  const TranslationDraft& final_draft() const { return drafts.back(); }
};

struct FewShotExample {
  std::string source;
  std::string target;
};

struct ChainOptions {
  int max_iters = kDefaultMaxIters;
  VerifierConfig verifier;
  /// Prepended as earlier user/assistant turns of the first translation.
  std::vector<FewShotExample> examples;
};

/// Removes markdown fencing and one layer of matching surrounding quotes.
inline std::string clean_translation(const std::string& raw) {
  auto trim = [](std::u32string s) {
    size_t b = 0;
    while (b < s.size() && unicode::is_whitespace(s[b])) ++b;
    size_t e = s.size();
    while (e > b && unicode::is_whitespace(s[e - 1])) --e;
    return s.substr(b, e - b);
  };
  std::u32string s = trim(unicode::decode(raw));
  if (s.rfind(U"```", 0) == 0) {
    const auto nl = s.find(U'\n');
    s = nl == std::u32string::npos ? std::u32string{} : s.substr(nl + 1);
    if (const auto close = s.rfind(U"```"); close != std::u32string::npos) s.erase(close);
    s = trim(s);
  }
  static constexpr std::pair<char32_t, char32_t> kQuotes[] = {
      {U'"', U'"'}, {U'\'', U'\''}, {U'“', U'”'}, {U'‘', U'’'}, {U'«', U'»'}, {U'„', U'“'}, {U'`', U'`'}};
  if (s.size() >= 2) {
    for (auto [open, close] : kQuotes) {
      if (s.front() == open && s.back() == close) {
        s = trim(s.substr(1, s.size() - 2));
        break;
      }
    }
  }
  return unicode::encode(s);
}

namespace detail {

inline TranslationDraft make_draft(std::string text, int iteration, const ConstraintSet& constraints,
                                   const VerifierConfig& cfg) {
  TranslationDraft d;
  d.text = std::move(text);
  d.iteration = iteration;
  d.satisfied = verify(d.text, constraints, cfg);
  d.all_satisfied = std::all_of(d.satisfied.begin(), d.satisfied.end(), [](bool b) { return b; });
  return d;
}

inline std::string checked_translation(const ChatResponse& resp) {
  std::string text = clean_translation(resp.content);
  if (text.empty()) fail(ErrorKind::empty_translation, "model returned an empty translation");
  return text;
}

inline std::vector<ChatMessage> translation_messages(const SourceSentence& sentence, const ConstraintSet& constraints,
                                                     const std::vector<FewShotExample>& examples) {
  std::vector<ChatMessage> messages{{Role::system, std::string(prompts::kTranslatorSystem)}};
  for (const auto& ex : examples) {
    messages.push_back({Role::user, prompts::translation(sentence.src_lang(), sentence.tgt_lang(), {}, ex.source)});
    messages.push_back({Role::assistant, ex.target});
  }
  messages.push_back(
      {Role::user, prompts::translation(sentence.src_lang(), sentence.tgt_lang(), constraints, sentence.text())});
  return messages;
}

}  // namespace detail

/// First translation, conditioned on the sentence and its constraints.
inline TranslationDraft translate_initial(const SourceSentence& sentence, const ConstraintSet& constraints,
                                          LlmBackend& llm, const ChainOptions& opts = {}) {
  ChatRequest req;
  req.purpose = "translate";
  req.messages = detail::translation_messages(sentence, constraints, opts.examples);
  return detail::make_draft(detail::checked_translation(llm.complete(req)), 1, constraints, opts.verifier);
}

/// Asks for a revision listing exactly the unmet constraints.
inline TranslationDraft self_check_step(const SourceSentence& sentence, const ConstraintSet& constraints,
                                        const TranslationDraft& prior, LlmBackend& llm,
                                        const ChainOptions& opts = {}) {
  if (prior.all_satisfied) fail(ErrorKind::invalid_input, "self-check requested for a draft that satisfies everything");
  std::vector<LexicalConstraint> unmet;
  for (size_t i = 0; i < constraints.size(); ++i) {
    if (!prior.satisfied[i]) unmet.push_back(constraints[i]);
  }
  ChatRequest req;
  req.purpose = "self_check";
  req.messages = detail::translation_messages(sentence, constraints, {});
  req.messages.push_back({Role::assistant, prior.text});
  req.messages.push_back({Role::user, prompts::self_check(prior.text, unmet)});
  return detail::make_draft(detail::checked_translation(llm.complete(req)), prior.iteration + 1, constraints,
                            opts.verifier);
}

/// First standalone "1" or "2" in a reply (not touching another letter or
/// digit), if any.
inline std::optional<BestChoice> parse_choice(const std::string& reply) {
  const std::u32string s = unicode::decode(reply);
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != U'1' && s[i] != U'2') continue;
    const bool left_ok = i == 0 || !unicode::is_letter_or_digit(s[i - 1]);
    const bool right_ok = i + 1 == s.size() || !unicode::is_letter_or_digit(s[i + 1]);
    if (left_ok && right_ok) return s[i] == U'1' ? BestChoice::first : BestChoice::final;
  }
  return std::nullopt;
}

struct SelectionOutcome {
  BestChoice choice = BestChoice::final;
  bool fallback = false;
  std::string detail;
};

/// Lets the model pick between the first and the final draft. Unparseable
/// replies and transport errors fall back to the draft meeting more
/// constraints, preferring the final one on ties.
inline SelectionOutcome select_best(const SourceSentence& sentence, const TranslationDraft& y1,
                                    const TranslationDraft& yfinal, const ConstraintSet& constraints,
                                    LlmBackend& llm) {
  if (y1.text == yfinal.text) fail(ErrorKind::invalid_input, "select_best needs two different candidates");
  auto fallback = [&](std::string why) {
    const BestChoice c =
        yfinal.satisfied_count() >= y1.satisfied_count() ? BestChoice::final : BestChoice::first;
    return SelectionOutcome{c, true, std::move(why)};
  };
  ChatRequest req;
  req.purpose = "select";
  req.messages = {{Role::system, std::string(prompts::kTranslatorSystem)},
                  {Role::user, prompts::selection(sentence.text(), constraints, y1.text, yfinal.text)}};
  std::string reply;
  try {
    reply = llm.complete(req).content;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::transport && e.kind() != ErrorKind::protocol) throw;
    return fallback(e.what());
  }
  if (auto choice = parse_choice(reply)) return {*choice, false, {}};
  return fallback("unparseable selection reply: " + reply);
}

/// Initial translation, self-check revisions until every constraint holds,
/// the budget is spent or the model stalls, then selection between the
/// first and final drafts.
inline ChainResult run_chain(const SourceSentence& sentence, const ConstraintSet& constraints, LlmBackend& llm,
                             const ChainOptions& opts = {}) {
  if (opts.max_iters < 1) fail(ErrorKind::invalid_input, "max_iters must be >= 1");
  ChainResult result;
  result.drafts.push_back(translate_initial(sentence, constraints, llm, opts));

  while (!result.drafts.back().all_satisfied && result.drafts.back().iteration < opts.max_iters) {
    TranslationDraft next;
    try {
      next = self_check_step(sentence, constraints, result.drafts.back(), llm, opts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::transport && e.kind() != ErrorKind::protocol &&
          e.kind() != ErrorKind::empty_translation) {
        throw;
      }
      result.degraded.refinement_aborted = true;
      result.degraded.detail = e.what();
      break;
    }
    const bool stalled = next.text == result.drafts.back().text;
    result.drafts.push_back(std::move(next));
    if (stalled) break;
  }

  const TranslationDraft& y1 = result.first();
  const TranslationDraft& yfinal = result.final_draft();
  if (y1.text == yfinal.text) {
    result.best = BestChoice::final;
  } else {
    SelectionOutcome sel = select_best(sentence, y1, yfinal, constraints, llm);
    result.best = sel.choice;
    if (sel.fallback) {
      result.degraded.selection_fallback = true;
      if (result.degraded.detail.empty()) result.degraded.detail = sel.detail;
    }
  }
  result.best_text = result.best == BestChoice::first ? y1.text : yfinal.text;
  return result;
}

}  // namespace lexichain
