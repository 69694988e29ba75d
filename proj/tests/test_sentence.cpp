#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lexichain/sentence.hpp"
#include "lexichain/unicode.hpp"

using namespace lexichain;

namespace {

std::vector<size_t> indices(const KeywordSelection& s) {
  std::vector<size_t> out;
  for (const auto& k : s.keywords) out.push_back(k.token_index);
  return out;
}

SourceSentence words(size_t n) {
  std::string text;
  for (size_t i = 0; i < n; ++i) text += (i ? " w" : "w") + std::to_string(i);
  return SourceSentence(text, "en", "de");
}

// Strips every P*/S* character, then splits on whitespace.
std::vector<std::string> bare_words(const std::string& text) {
  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(unicode::encode(cur));
    cur.clear();
  };
  for (char32_t c : unicode::decode(text)) {
    if (unicode::is_whitespace(c)) {
      flush();
    } else if (!unicode::is_punct_or_symbol(c)) {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace

TEST(Tokenize, StripsEdgePunctuation) {
  EXPECT_EQ(tokenize("The cat sat."), (std::vector<std::string>{"The", "cat", "sat"}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, KeepsWordInternalPunctuation) {
  EXPECT_EQ(tokenize("état—civil, rare"), (std::vector<std::string>{"état—civil", "rare"}));
}

TEST(Tokenize, DropsPunctuationOnlyTokens) {
  EXPECT_EQ(tokenize("« Bonjour » — dit-il ..."), (std::vector<std::string>{"Bonjour", "dit-il"}));
}

TEST(Tokenize, UnicodeWhitespace) {
  EXPECT_EQ(tokenize("a b　c\td\ne"), (std::vector<std::string>{"a", "b", "c", "d", "e"}));
}

TEST(Tokenize, SymbolsAtEdges) {
  EXPECT_EQ(tokenize("$20 50% +x+"), (std::vector<std::string>{"20", "50", "x"}));
}

TEST(Tokenize, PropertyIdempotentAndFaithful) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"the", "Mädchen", "ça", "l'home", "z.B.", ",", ".", "!", "«", "»",
                                           "—", "2,5", "(x)", "\"q\"", "–", "a-b", "…", "€5", "#tag", " ", "\t"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const size_t n = rng() % 12;
    for (size_t i = 0; i < n; ++i) {
      text += pieces[rng() % pieces.size()];
      if (rng() % 3) text += ' ';
    }
    const auto toks = tokenize(text);
    for (const auto& t : toks) {
      ASSERT_FALSE(t.empty());
      ASSERT_EQ(tokenize(t), std::vector<std::string>{t}) << "text: " << text;
    }
    std::string joined;
    for (const auto& t : toks) joined += (joined.empty() ? "" : " ") + t;
    ASSERT_EQ(bare_words(joined), bare_words(text)) << "text: " << text;
  }
}

TEST(SourceSentence, RejectsSameLanguage) {
  try {
    SourceSentence("x", "en", "en");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(SourceSentence, KeepsTextVerbatim) {
  SourceSentence s("  The cat sat.  ", "en", "ca");
  EXPECT_EQ(s.text(), "  The cat sat.  ");
  EXPECT_EQ(s.size(), 3u);
}

TEST(PriorityScores, RejectsOutOfRange) {
  EXPECT_THROW(PriorityScores({0.5, 1.2}), Error);
  EXPECT_THROW(PriorityScores({-0.1}), Error);
  EXPECT_NO_THROW(PriorityScores({0.0, 1.0}));
}

TEST(AdaptiveK, Examples) {
  EXPECT_EQ(adaptive_k(21), 5u);
  EXPECT_EQ(adaptive_k(3), 1u);
  EXPECT_EQ(adaptive_k(60), 8u);
}

TEST(AdaptiveK, ZeroIsInvalid) {
  try {
    adaptive_k(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(AdaptiveK, BoundedAndMonotone) {
  size_t prev = 1;
  for (size_t n = 1; n <= 1000; ++n) {
    const size_t k = adaptive_k(n);
    ASSERT_GE(k, 1u);
    ASSERT_LE(k, 8u);
    ASSERT_GE(k, prev);
    prev = k;
  }
}

TEST(SelectTopK, Examples) {
  EXPECT_EQ(indices(select_top_k(words(4), PriorityScores({0.9, 0.1, 0.8, 0.3}), 2)), (std::vector<size_t>{0, 2}));
  EXPECT_EQ(indices(select_top_k(words(3), PriorityScores({0.5, 0.5, 0.2}), 1)), (std::vector<size_t>{0}));
  EXPECT_EQ(indices(select_top_k(words(4), PriorityScores({0.1, 0.2, 0.3, 0.4}), 10)),
            (std::vector<size_t>{0, 1, 2, 3}));
}

TEST(SelectTopK, Errors) {
  EXPECT_THROW(select_top_k(words(3), PriorityScores({0.1, 0.2}), 1), Error);
  EXPECT_THROW(select_top_k(words(2), PriorityScores({0.1, 0.2}), 0), Error);
}

TEST(SelectTopK, KeywordsCarryWords) {
  SourceSentence s("The cat sat.", "en", "de");
  auto sel = select_top_k(s, PriorityScores({0.1, 0.9, 0.5}), 2);
  ASSERT_EQ(sel.keywords.size(), 2u);
  EXPECT_EQ(sel.keywords[0].word, "cat");
  EXPECT_EQ(sel.keywords[1].word, "sat");
  EXPECT_EQ(sel.k, 2u);
}

// Brute force: k highest by (score desc, index asc).
TEST(SelectTopK, MatchesBruteForceAndPermutationConsistent) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 1 + rng() % 15;
    const size_t k = 1 + rng() % 10;
    std::vector<double> sc(n);
    for (auto& v : sc) v = static_cast<double>(rng() % 5) / 4.0;  // many ties
    const auto s = words(n);
    const auto sel = select_top_k(s, PriorityScores(sc), k);

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return sc[a] != sc[b] ? sc[a] > sc[b] : a < b; });
    order.resize(std::min(k, n));
    std::sort(order.begin(), order.end());
    ASSERT_EQ(indices(sel), order);

    // Tie-break follows position, so permutation is checked on distinct scores.
    std::vector<double> distinct(n);
    for (size_t i = 0; i < n; ++i) distinct[i] = static_cast<double>(i) / static_cast<double>(n);
    std::shuffle(distinct.begin(), distinct.end(), rng);
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::string ptext;
    std::vector<double> pscores(n);
    for (size_t i = 0; i < n; ++i) {
      ptext += (i ? " w" : "w") + std::to_string(perm[i]);
      pscores[i] = distinct[perm[i]];
    }
    auto words_of = [](const KeywordSelection& ks) {
      std::vector<std::string> w;
      for (const auto& kw : ks.keywords) w.push_back(kw.word);
      std::sort(w.begin(), w.end());
      return w;
    };
    const auto a = select_top_k(s, PriorityScores(distinct), k);
    const auto b = select_top_k(SourceSentence(ptext, "en", "de"), PriorityScores(pscores), k);
    ASSERT_EQ(words_of(a), words_of(b));
  }
}
