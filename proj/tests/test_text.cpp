#include <artjudge/text.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace artjudge;

TEST(Tokenize, LowercasesAndSplitsOnNonWordBytes) {
  EXPECT_EQ(tokenize("Monet's  Rouen, 1892!"), (std::vector<std::string>{"monet", "s", "rouen", "1892"}));
  EXPECT_TRUE(tokenize(" ,.;").empty());
  // bytes above 0x7f stay inside words
  EXPECT_EQ(tokenize("Dal\xc3\xad painted"), (std::vector<std::string>{"dal\xc3\xad", "painted"}));
}

TEST(SplitSentences, TerminatorsAndTrailingText) {
  EXPECT_EQ(split_sentences("One. Two!  Three? four"), (std::vector<std::string>{"One.", "Two!", "Three?", "four"}));
  EXPECT_TRUE(split_sentences("   ").empty());
}

TEST(HashingEncoder, DeterministicUnitVectors) {
  HashingEncoder e(64);
  const auto a = e.encode("Japanese prints in Paris");
  EXPECT_EQ(a, e.encode("Japanese prints in Paris"));
  EXPECT_NEAR(HashingEncoder::similarity(a, a), 1.0, 1e-12);
  EXPECT_EQ(e.encode("").size(), 64u);
  EXPECT_EQ(HashingEncoder::similarity(e.encode(""), a), 0.0);
  const auto b = e.encode("Japanese prints");
  const auto c = e.encode("harbour at dusk");
  EXPECT_GT(HashingEncoder::similarity(a, b), HashingEncoder::similarity(a, c));
  EXPECT_THROW(HashingEncoder(0), DataError);
}

TEST(FindPhrases, WordBoundedCaseInsensitive) {
  const std::vector<std::string> p = {"admired"};
  EXPECT_EQ(find_phrases("He ADMIRED her", p).size(), 1u);
  EXPECT_TRUE(find_phrases("the unadmired one", p).empty());
  EXPECT_TRUE(find_phrases("admiredly", p).empty());
}

TEST(MaskText, DirectHit) {
  EXPECT_EQ(mask_text("Ernst was influenced by Dali.", {"was influenced by"}), "Ernst [REDACTED] Dali.");
}

TEST(MaskText, NoPatternIsIdentity) {
  const std::string t = "A quiet harbour at dusk, 1874.";
  EXPECT_EQ(mask_text(t, default_lexicon()), t);
}

TEST(MaskText, OverlapIsLeftmostLongest) {
  // "influenced" starts at the same place as the longer "influenced by"; the
  // longer one wins. "by Dali" overlaps the end of that match and is skipped.
  const std::vector<std::string> p = {"influenced", "influenced by", "by Dali", "Dali admired"};
  EXPECT_EQ(mask_text("She was influenced by Dali admired works", p), "She was [REDACTED] [REDACTED] works");
  EXPECT_EQ(mask_text("She was influenced by Dali admired works", p), mask_text("She was influenced by Dali admired works", p));
}

TEST(MaskText, IdempotentAndPreservesUnmatchedBytes) {
  const auto lex = default_lexicon();
  std::mt19937_64 rng(3);
  const std::vector<std::string> words = {"the", "painter", "admired", "was", "influenced", "by", "Paris", "in", "1880", ",", "studied",
                                          "under", "Rome", "pupil", "of", "\xc3\xa9tude"};
  for (int t = 0; t < 200; ++t) {
    std::string s;
    for (int i = 0; i < 12; ++i) s += words[rng() % words.size()] + (rng() % 3 ? " " : ". ");
    const auto once = mask_text(s, lex);
    EXPECT_EQ(mask_text(once, lex), once);
    // the original with each match swapped for the token
    std::string rebuilt;
    std::size_t at = 0;
    for (const auto& m : find_phrases(s, lex.influence_predicates)) {
      rebuilt += s.substr(at, m.pos - at) + std::string(kRedactionToken);
      at = m.pos + m.len;
    }
    rebuilt += s.substr(at);
    EXPECT_EQ(once, rebuilt);
  }
}

TEST(MaskText, EmptyLexiconRejected) { EXPECT_THROW(mask_text("x", std::vector<std::string>{}), DataError); }

TEST(Lexicon, ValidateRejectsPredicatesMatchingTheToken) {
  auto l = default_lexicon();
  EXPECT_NO_THROW(validate_lexicon(l));
  l.influence_predicates.push_back("redacted");
  EXPECT_THROW(validate_lexicon(l), DataError);
  l.influence_predicates.clear();
  EXPECT_THROW(validate_lexicon(l), DataError);
}

TEST(Lexicon, JsonRoundTrip) {
  const auto l = default_lexicon();
  const auto back = json(l).get<CueLexicon>();
  EXPECT_EQ(back.influence_predicates, l.influence_predicates);
  EXPECT_EQ(back.cities, l.cities);
  EXPECT_EQ(back.terminology, l.terminology);
  artjudge::testing::ScratchDir dir("lexicon");
  write_text_file(dir / "lex.json", json(l).dump());
  EXPECT_EQ(read_lexicon(dir / "lex.json").exhibitions, l.exhibitions);
}
