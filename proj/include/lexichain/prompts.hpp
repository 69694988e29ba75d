#pragma once

// Every prompt the pipeline sends is rendered here. Changing any wording
// must bump kPromptVersion so run fingerprints change with it.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lexichain/constraint.hpp"
#include "lexichain/languages.hpp"

namespace lexichain::prompts {

inline constexpr std::string_view kPromptVersion = "prompts-v1";

inline constexpr std::string_view kAnalystSystem = "You are a translation analyst.";
inline constexpr std::string_view kTranslatorSystem = "You are a professional translator.";

/// {"0": "The", "1": "cat", ...}
inline std::string indexed_tokens(std::span<const std::string> tokens) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (size_t i = 0; i < tokens.size(); ++i) j[std::to_string(i)] = tokens[i];
  return j.dump();
}

inline std::string keyword_scoring(std::string_view src_lang, std::string_view tgt_lang,
                                   std::span<const std::string> tokens) {
  return "Identify the words most critical for accurately translating the following " + language_name(src_lang) +
         " sentence into " + language_name(tgt_lang) +
         ". Return ONLY a JSON object mapping each word's 0-based index to an importance score between 0 and 1. "
         "Sentence tokens: " +
         indexed_tokens(tokens);
}

inline std::string keyword_reminder(size_t token_count) {
  return "Your reply could not be parsed. Reply with ONLY a JSON object whose keys are the token indices 0 to " +
         std::to_string(token_count - 1) + " (as strings) and whose values are numbers between 0 and 1.";
}

/// The plain zero-shot instruction, without the sentence.
inline std::string baseline_instruction(std::string_view src_lang, std::string_view tgt_lang) {
  return "Translate the following sentence from " + language_name(src_lang) + " to " + language_name(tgt_lang) + ".";
}

/// "w1 → t1; w2 → t2"
inline std::string term_list(std::span<const LexicalConstraint> constraints) {
  std::string out;
  for (const auto& c : constraints) {
    if (!out.empty()) out += "; ";
    out += c.source_word + " → " + c.target_term;
  }
  return out;
}

inline std::string sentence_line(std::string_view text) { return "\nSentence: " + std::string(text); }

/// Translation request. Without constraints this is the baseline
/// instruction followed by the sentence line.
inline std::string translation(std::string_view src_lang, std::string_view tgt_lang, const ConstraintSet& constraints,
                               std::string_view text) {
  if (constraints.empty()) return baseline_instruction(src_lang, tgt_lang) + sentence_line(text);
  return baseline_instruction(src_lang, tgt_lang) +
         " Translation notes — use these exact term translations: " + term_list(constraints.items()) +
         ". Output only the translation." + sentence_line(text);
}

inline std::string self_check(std::string_view previous, std::span<const LexicalConstraint> unmet) {
  return "Your previous translation: " + std::string(previous) +
         ". The following required terms are missing or mistranslated: " + term_list(unmet) +
         ". Revise the translation so every required term translation appears, preserving fluency. "
         "Output only the revised translation.";
}

inline std::string selection(std::string_view source_text, const ConstraintSet& constraints, std::string_view first,
                             std::string_view final_text) {
  return "Source sentence: " + std::string(source_text) + "\nRequired term translations: " +
         term_list(constraints.items()) +
         "\nGiven the source sentence and required term translations, which candidate better satisfies the required "
         "terms while remaining fluent? Candidate 1: " +
         std::string(first) + " Candidate 2: " + std::string(final_text) + ". Answer with exactly 1 or 2.";
}

}  // namespace lexichain::prompts
