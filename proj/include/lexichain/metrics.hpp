#pragma once

// Corpus BLEU (13a tokenization, exponential smoothing) and chrF++ that
// reproduce sacreBLEU 2.x defaults. All string handling is on code points
// and uses Python's whitespace definition, since that is what the
// reference scorer sees.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lexichain/error.hpp"
#include "lexichain/unicode.hpp"

namespace lexichain::metrics {

inline constexpr std::string_view kImplVersion = "lexichain-0.1.0";

struct BleuConfig {
  int max_ngram = 4;
  bool case_sensitive = true;

  std::string signature() const {
    return std::string("nrefs:1|case:") + (case_sensitive ? "mixed" : "lc") +
           "|eff:no|tok:13a|smooth:exp|version:" + std::string(kImplVersion);
  }
};

struct ChrfConfig {
  int char_order = 6;
  int word_order = 2;
  double beta = 2.0;

  std::string signature() const {
    return "nrefs:1|case:mixed|eff:yes|nc:" + std::to_string(char_order) + "|nw:" + std::to_string(word_order) +
           "|space:no|version:" + std::string(kImplVersion);
  }
};

struct CorpusScore {
  double score = 0.0;
  std::vector<double> per_ngram_precisions;
  double brevity_penalty = 1.0;
  long sys_len = 0;
  long ref_len = 0;
};

namespace detail {

using U32 = std::u32string;

inline U32 rstrip(U32 s) {
  while (!s.empty() && unicode::is_python_space(s.back())) s.pop_back();
  return s;
}

inline std::vector<U32> split(const U32& s) {
  std::vector<U32> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && unicode::is_python_space(s[i])) ++i;
    const size_t b = i;
    while (i < s.size() && !unicode::is_python_space(s[i])) ++i;
    if (b < i) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline void replace_all(U32& s, std::u32string_view from, std::u32string_view to) {
  U32 out;
  size_t pos = 0;
  while (true) {
    const size_t hit = s.find(from, pos);
    if (hit == U32::npos) break;
    out.append(s, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s, pos, U32::npos);
  s.swap(out);
}

inline bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

/// Characters split off by the first 13a rule.
inline bool is_13a_symbol(char32_t c) {
  return (c >= U'{' && c <= U'~') || (c >= U'[' && c <= U'`') || (c >= U' ' && c <= U'&') ||
         (c >= U'(' && c <= U'+') || (c >= U':' && c <= U'@') || c == U'/';
}

/// Left-to-right, non-overlapping substitution for a two-character pattern,
/// mirroring regex substitution semantics.
template <typename Match, typename Emit>
U32 substitute_pairs(const U32& s, Match match, Emit emit) {
  U32 out;
  out.reserve(s.size() + s.size() / 4);
  size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && match(s[i], s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

inline U32 join(const std::vector<U32>& parts) {
  U32 out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(U' ');
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// mteval-v13a tokenization; returns the tokens.
inline std::vector<std::u32string> tokenize_13a(std::u32string line) {
  using namespace detail;
  replace_all(line, U"<skipped>", U"");
  replace_all(line, U"-\n", U"");
  replace_all(line, U"\n", U" ");
  if (line.find(U'&') != U32::npos) {
    replace_all(line, U"&quot;", U"\"");
    replace_all(line, U"&amp;", U"&");
    replace_all(line, U"&lt;", U"<");
    replace_all(line, U"&gt;", U">");
  }
  U32 s = U" " + line + U" ";

  U32 t;
  t.reserve(s.size() * 2);
  for (char32_t c : s) {
    if (is_13a_symbol(c)) {
      t.push_back(U' ');
      t.push_back(c);
      t.push_back(U' ');
    } else {
      t.push_back(c);
    }
  }
  // period/comma unless preceded by a digit
  t = substitute_pairs(
      t, [](char32_t a, char32_t b) { return !is_ascii_digit(a) && (b == U'.' || b == U','); },
      [](U32& o, char32_t a, char32_t b) {
        o.push_back(a);
        o.push_back(U' ');
        o.push_back(b);
        o.push_back(U' ');
      });
  // period/comma unless followed by a digit
  t = substitute_pairs(
      t, [](char32_t a, char32_t b) { return (a == U'.' || a == U',') && !is_ascii_digit(b); },
      [](U32& o, char32_t a, char32_t b) {
        o.push_back(U' ');
        o.push_back(a);
        o.push_back(U' ');
        o.push_back(b);
      });
  // dash preceded by a digit
  t = substitute_pairs(
      t, [](char32_t a, char32_t b) { return is_ascii_digit(a) && b == U'-'; },
      [](U32& o, char32_t a, char32_t b) {
        o.push_back(a);
        o.push_back(U' ');
        o.push_back(b);
        o.push_back(U' ');
      });
  return split(t);
}

inline std::string tokenize_13a(std::string_view line) {
  return unicode::encode(detail::join(tokenize_13a(unicode::decode(line))));
}

namespace detail {

using NgramCounts = std::unordered_map<U32, long>;

/// Word n-grams of orders 1..max_order keyed by the space-joined n-gram,
/// one map per order.
inline std::vector<NgramCounts> word_ngrams(const std::vector<U32>& tokens, int min_order, int max_order) {
  std::vector<NgramCounts> out(static_cast<size_t>(max_order - min_order + 1));
  for (int n = min_order; n <= max_order; ++n) {
    auto& counts = out[static_cast<size_t>(n - min_order)];
    for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
      U32 key = tokens[i];
      for (size_t j = 1; j < static_cast<size_t>(n); ++j) {
        key.push_back(U' ');
        key += tokens[i + j];
      }
      ++counts[key];
    }
  }
  return out;
}

struct BleuStats {
  long sys_len = 0;
  long ref_len = 0;
  std::vector<long> correct;
  std::vector<long> total;
};

inline U32 bleu_preprocess(std::string_view s, const BleuConfig& cfg) {
  std::string text(s);
  if (!cfg.case_sensitive) text = unicode::to_lower(text);
  return rstrip(unicode::decode(text));
}

inline BleuStats bleu_segment(std::string_view hyp, std::string_view ref, const BleuConfig& cfg) {
  const auto hyp_tokens = tokenize_13a(bleu_preprocess(hyp, cfg));
  const auto ref_tokens = tokenize_13a(bleu_preprocess(ref, cfg));
  const auto hyp_ngrams = word_ngrams(hyp_tokens, 1, cfg.max_ngram);
  const auto ref_ngrams = word_ngrams(ref_tokens, 1, cfg.max_ngram);
  BleuStats st;
  st.sys_len = static_cast<long>(hyp_tokens.size());
  st.ref_len = static_cast<long>(ref_tokens.size());
  st.correct.assign(static_cast<size_t>(cfg.max_ngram), 0);
  st.total.assign(static_cast<size_t>(cfg.max_ngram), 0);
  for (size_t n = 0; n < hyp_ngrams.size(); ++n) {
    for (const auto& [gram, count] : hyp_ngrams[n]) {
      st.total[n] += count;
      if (auto it = ref_ngrams[n].find(gram); it != ref_ngrams[n].end()) st.correct[n] += std::min(count, it->second);
    }
  }
  return st;
}

/// log with the reference scorer's floor for zero.
inline double floored_log(double x) { return x == 0.0 ? -9999999999.0 : std::log(x); }

inline CorpusScore bleu_from_stats(const BleuStats& st, int max_ngram) {
  CorpusScore out;
  out.sys_len = st.sys_len;
  out.ref_len = st.ref_len;
  out.brevity_penalty = 1.0;
  if (st.sys_len < st.ref_len) {
    out.brevity_penalty = st.sys_len > 0 ? std::exp(1.0 - static_cast<double>(st.ref_len) / st.sys_len) : 0.0;
  }
  out.per_ngram_precisions.assign(static_cast<size_t>(max_ngram), 0.0);
  bool any_correct = false;
  for (long c : st.correct) any_correct = any_correct || c != 0;
  if (!any_correct) {
    out.score = 0.0;
    return out;
  }
  double smooth = 1.0;
  for (size_t n = 0; n < static_cast<size_t>(max_ngram); ++n) {
    if (st.total[n] == 0) break;
    if (st.correct[n] == 0) {
      smooth *= 2.0;
      out.per_ngram_precisions[n] = 100.0 / (smooth * static_cast<double>(st.total[n]));
    } else {
      out.per_ngram_precisions[n] = 100.0 * static_cast<double>(st.correct[n]) / static_cast<double>(st.total[n]);
    }
  }
  double log_sum = 0.0;
  for (double p : out.per_ngram_precisions) log_sum += floored_log(p);
  out.score = out.brevity_penalty * std::exp(log_sum / max_ngram);
  return out;
}

inline void check_corpus(std::span<const std::string> hyps, std::span<const std::string> refs) {
  if (hyps.size() != refs.size()) {
    fail(ErrorKind::invalid_input, "hypothesis count " + std::to_string(hyps.size()) +
                                       " differs from reference count " + std::to_string(refs.size()));
  }
  if (hyps.empty()) fail(ErrorKind::invalid_input, "cannot score an empty corpus");
}

}  // namespace detail

inline CorpusScore bleu_corpus(std::span<const std::string> hyps, std::span<const std::string> refs,
                               const BleuConfig& cfg = {}) {
  detail::check_corpus(hyps, refs);
  if (cfg.max_ngram < 1) fail(ErrorKind::invalid_input, "max_ngram must be >= 1");
  detail::BleuStats total;
  total.correct.assign(static_cast<size_t>(cfg.max_ngram), 0);
  total.total.assign(static_cast<size_t>(cfg.max_ngram), 0);
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto st = detail::bleu_segment(hyps[i], refs[i], cfg);
    total.sys_len += st.sys_len;
    total.ref_len += st.ref_len;
    for (size_t n = 0; n < st.correct.size(); ++n) {
      total.correct[n] += st.correct[n];
      total.total[n] += st.total[n];
    }
  }
  return detail::bleu_from_stats(total, cfg.max_ngram);
}

namespace detail {

inline bool is_ascii_punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~');
}

/// chrF++ word splitting: one leading or trailing ASCII punctuation mark is
/// separated from each multi-character word (trailing checked first).
inline std::vector<U32> chrf_words(const U32& s) {
  std::vector<U32> out;
  for (U32& w : split(s)) {
    if (w.size() == 1) {
      out.push_back(std::move(w));
    } else if (is_ascii_punct(w.back())) {
      out.push_back(w.substr(0, w.size() - 1));
      out.push_back(w.substr(w.size() - 1));
    } else if (is_ascii_punct(w.front())) {
      out.push_back(w.substr(0, 1));
      out.push_back(w.substr(1));
    } else {
      out.push_back(std::move(w));
    }
  }
  return out;
}

inline std::vector<NgramCounts> chrf_ngrams(const U32& s, const ChrfConfig& cfg) {
  U32 chars;
  for (char32_t c : s) {
    if (!unicode::is_python_space(c)) chars.push_back(c);
  }
  std::vector<NgramCounts> out(static_cast<size_t>(cfg.char_order));
  for (int n = 1; n <= cfg.char_order; ++n) {
    auto& counts = out[static_cast<size_t>(n - 1)];
    for (size_t i = 0; i + static_cast<size_t>(n) <= chars.size(); ++i) ++counts[chars.substr(i, static_cast<size_t>(n))];
  }
  if (cfg.word_order > 0) {
    auto words = word_ngrams(chrf_words(s), 1, cfg.word_order);
    for (auto& w : words) out.push_back(std::move(w));
  }
  return out;
}

/// Per order: hypothesis n-grams, reference n-grams, matches.
using ChrfStats = std::vector<std::array<long, 3>>;

inline ChrfStats chrf_segment(std::string_view hyp, std::string_view ref, const ChrfConfig& cfg) {
  const auto h = chrf_ngrams(unicode::decode(hyp), cfg);
  const auto r = chrf_ngrams(unicode::decode(ref), cfg);
  ChrfStats st(h.size());
  for (size_t n = 0; n < h.size(); ++n) {
    long hyp_count = 0;
    long ref_count = 0;
    long matches = 0;
    for (const auto& [gram, count] : h[n]) {
      hyp_count += count;
      if (auto it = r[n].find(gram); it != r[n].end()) matches += std::min(count, it->second);
    }
    for (const auto& [gram, count] : r[n]) ref_count += count;
    // hypothesis n-grams only count when the reference has some of that order
    st[n] = {r[n].empty() ? 0 : hyp_count, ref_count, matches};
  }
  return st;
}

}  // namespace detail

inline CorpusScore chrf_pp(std::span<const std::string> hyps, std::span<const std::string> refs,
                           const ChrfConfig& cfg = {}) {
  detail::check_corpus(hyps, refs);
  if (cfg.char_order < 1 || cfg.word_order < 0) fail(ErrorKind::invalid_input, "bad chrF orders");
  const size_t orders = static_cast<size_t>(cfg.char_order + cfg.word_order);
  detail::ChrfStats total(orders, {0, 0, 0});
  for (size_t i = 0; i < hyps.size(); ++i) {
    const auto st = detail::chrf_segment(hyps[i], refs[i], cfg);
    for (size_t n = 0; n < orders; ++n) {
      for (size_t k = 0; k < 3; ++k) total[n][k] += st[n][k];
    }
  }

  CorpusScore out;
  out.per_ngram_precisions.assign(orders, 0.0);
  const double factor = cfg.beta * cfg.beta;
  double avg_prec = 0.0;
  double avg_rec = 0.0;
  int effective_order = 0;
  for (size_t n = 0; n < orders; ++n) {
    const auto [n_hyp, n_ref, n_match] = total[n];
    if (n_hyp > 0) out.per_ngram_precisions[n] = 100.0 * static_cast<double>(n_match) / static_cast<double>(n_hyp);
    if (n_hyp > 0 && n_ref > 0) {
      avg_prec += static_cast<double>(n_match) / static_cast<double>(n_hyp);
      avg_rec += static_cast<double>(n_match) / static_cast<double>(n_ref);
      ++effective_order;
    }
  }
  out.sys_len = total[0][0];
  out.ref_len = total[0][1];
  if (effective_order > 0) {
    avg_prec /= effective_order;
    avg_rec /= effective_order;
  }
  if (avg_prec + avg_rec != 0.0) {
    out.score = 100.0 * (1.0 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec);
  }
  return out;
}

/// {metric, score, signature, details}
inline nlohmann::json score_record(std::string_view metric, const CorpusScore& s, const std::string& signature) {
  return {{"metric", metric},
          {"score", s.score},
          {"signature", signature},
          {"details",
           {{"precisions", s.per_ngram_precisions},
            {"bp", s.brevity_penalty},
            {"sys_len", s.sys_len},
            {"ref_len", s.ref_len}}}};
}

}  // namespace lexichain::metrics
