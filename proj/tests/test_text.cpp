#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "synthweave/common.hpp"
#include "synthweave/text.hpp"

using namespace synthweave;

// Expected values computed independently with Python's unicodedata
// (NFC normalize, lowercase, whitespace collapse).
TEST(NormalizeText, MatchesIndependentOracle) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"  A  B\n", "a b"},
      {"", ""},
      {"Hello,   WORLD!  ", "hello, world!"},
      {"Café au lait", "café au lait"},
      {"Café au lait", "café au lait"},  // NFC composes e+0301
      {"Å ring", "å ring"},         // A+ring -> å
      {"MIXED\tCase\r\nText", "mixed case text"},
      {" leading nbsp and em space", "leading nbsp and em space"},
      {"ΓΕΙΑ ΣΟΥ Κόσμε",
       "γεια σου κόσμε"},
      {"ДОБРЫЙ день",
       "добрый день"},
      {"ẞharp eszett ß", "ßharp eszett ß"},
      {"math: ∫x² dx = x³/3", "math: ∫x² dx = x³/3"},
      {"line1\nline2\n\nline3", "line1 line2 line3"},
  };
  for (const auto& [input, expected] : cases) {
    EXPECT_EQ(normalize_text(input), expected) << "input: " << input;
  }
}

TEST(NormalizeText, Idempotent) {
  const std::vector<std::string> inputs = {
      "  A  B\n", "Café  MIXED\ttext ", "math: ∫x²",
      "ΓΕΙΑ ΣΟΥ", "punctuation, stays; intact!"};
  for (const std::string& s : inputs) {
    std::string once = normalize_text(s);
    EXPECT_EQ(normalize_text(once), once) << "input: " << s;
  }
}

TEST(NormalizeText, IdempotentOnRandomAscii) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    std::size_t len = rng.uniform_int(60);
    for (std::size_t i = 0; i < len; ++i)
      s.push_back(static_cast<char>(32 + rng.uniform_int(95)));
    std::string once = normalize_text(s);
    EXPECT_EQ(normalize_text(once), once);
  }
}

TEST(NormalizeText, PunctuationRetained) {
  EXPECT_EQ(normalize_text("What is 2+2? (Answer: 4!)"),
            "what is 2+2? (answer: 4!)");
}

TEST(Words, SplitsOnSingleSpaces) {
  std::vector<std::string> w = words(normalize_text("  The quick  brown\tfox "));
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[0], "the");
  EXPECT_EQ(w[3], "fox");
  EXPECT_TRUE(words("").empty());
}

TEST(WordNgrams, BasicAndEdgeCases) {
  std::vector<std::string> toks = {"a", "b", "c", "d"};
  std::vector<std::string> tri = word_ngrams(toks, 3);
  ASSERT_EQ(tri.size(), 2u);
  EXPECT_EQ(tri[0], "a b c");
  EXPECT_EQ(tri[1], "b c d");
  EXPECT_TRUE(word_ngrams(toks, 5).empty());
  EXPECT_EQ(word_ngrams(toks, 4).size(), 1u);
  EXPECT_THROW(word_ngrams(toks, 0), ArgumentError);
}

TEST(ShingleSet, DeduplicatesRepeats) {
  std::set<std::string> s = shingle_set(normalize_text("a b a b a b"), 2);
  // 2-grams: "a b", "b a" repeated
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.count("a b"));
  EXPECT_TRUE(s.count("b a"));
}

TEST(Jaccard, HandComputedValues) {
  std::set<std::string> a = {"x", "y", "z"};
  std::set<std::string> b = {"y", "z", "w"};
  EXPECT_DOUBLE_EQ(jaccard(a, b), 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  std::set<std::string> empty;
  EXPECT_DOUBLE_EQ(jaccard(empty, empty), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(a, empty), 0.0);
}

TEST(Utf8Head, CountsCodepointsNotBytes) {
  // "日本語テキスト" = 7 codepoints, 21 bytes
  std::string s = "日本語テキスト";
  EXPECT_EQ(utf8_head(s, 3), "日本語");
  EXPECT_EQ(utf8_head(s, 7), s);
  EXPECT_EQ(utf8_head(s, 100), s);
  EXPECT_EQ(utf8_head("abc", 2), "ab");
  EXPECT_EQ(utf8_head("", 5), "");
}
