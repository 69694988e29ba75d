#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lexichain/constraint.hpp"
#include "lexichain/unicode.hpp"

namespace lexichain {

struct VerifierConfig {
  bool casefold = true;
  bool unicode_normalize = true;  // NFKC
  bool word_boundary = true;
};

namespace detail {

/// Applies the configured normalization and collapses whitespace runs to a
/// single space.
inline std::u32string verifier_form(std::string_view text, const VerifierConfig& cfg) {
  std::string s(text);
  if (cfg.unicode_normalize) s = unicode::nfkc(s);
  if (cfg.casefold) {
    s = unicode::casefold(s);
    if (cfg.unicode_normalize) s = unicode::nfkc(s);
  }
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : unicode::decode(s)) {
    if (unicode::is_whitespace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  if (pending_space && !out.empty()) out.push_back(U' ');
  return out;
}

}  // namespace detail

/// True iff `term` occurs in `draft` under the configured normalization and,
/// when word_boundary is set, with no letter or digit directly on either
/// side of the occurrence.
inline bool term_present(std::u32string_view draft, std::u32string_view term, const VerifierConfig& cfg) {
  while (!term.empty() && term.front() == U' ') term.remove_prefix(1);
  while (!term.empty() && term.back() == U' ') term.remove_suffix(1);
  if (term.empty()) return false;
  for (size_t pos = draft.find(term); pos != std::u32string_view::npos; pos = draft.find(term, pos + 1)) {
    if (!cfg.word_boundary) return true;
    const bool left_ok = pos == 0 || !unicode::is_letter_or_digit(draft[pos - 1]);
    const size_t end = pos + term.size();
    const bool right_ok = end == draft.size() || !unicode::is_letter_or_digit(draft[end]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

/// One verdict per constraint, in constraint order.
inline std::vector<bool> verify(std::string_view draft_text, const ConstraintSet& constraints,
                                const VerifierConfig& cfg = {}) {
  const std::u32string draft = detail::verifier_form(draft_text, cfg);
  std::vector<bool> verdicts;
  verdicts.reserve(constraints.size());
  for (const auto& c : constraints) {
    verdicts.push_back(term_present(draft, detail::verifier_form(c.target_term, cfg), cfg));
  }
  return verdicts;
}

}  // namespace lexichain
