#include <gtest/gtest.h>

#include <cmath>

#include "morphtag/batch.hpp"
#include "morphtag/features.hpp"
#include "morphtag/lexicon.hpp"
#include "morphtag/vocab.hpp"
#include "synthetic.hpp"

namespace morphtag {
namespace {

Vocab chars_of(const std::string& text) {
  Vocab v;
  for (const auto& ch : utf8_chars(text)) v.add(ch);
  return v;
}

TEST(PadChars, ShortWordPaddedInFront) {
  const Vocab chars = chars_of("cat");
  const CharSequence seq = pad_chars("cat", chars);
  ASSERT_EQ(seq.size(), 11u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(seq[i], Vocab::kPad);
  EXPECT_EQ(seq[8], chars.id("c"));
  EXPECT_EQ(seq[9], chars.id("a"));
  EXPECT_EQ(seq[10], chars.id("t"));
}

TEST(PadChars, ElevenCharsUnpadded) {
  const Vocab chars = chars_of("abcdefghijklmnopqrstuvwxyz");
  const CharSequence seq = pad_chars("abcdefghijk", chars);
  for (std::size_t i = 0; i < 11; ++i) EXPECT_EQ(seq[i], chars.id(std::string(1, char('a' + i))));
  EXPECT_EQ(pad_chars("abcdefghijk", chars, 11), seq);
}

TEST(PadChars, LongWordKeepsSuffix) {
  const Vocab chars = chars_of("abcdefghijklmnopqrstuvwxyz");
  const CharSequence seq = pad_chars("abcdefghijklmno", chars);
  ASSERT_EQ(seq.size(), 11u);
  EXPECT_EQ(seq.front(), chars.id("e"));
  EXPECT_EQ(seq.back(), chars.id("o"));
  EXPECT_EQ(pad_chars("zzzzefghijklmno", chars), seq);
}

TEST(PadChars, MultibyteAndUnknownChars) {
  const Vocab chars = chars_of("кот");
  const CharSequence seq = pad_chars("кот!", chars);
  EXPECT_EQ(seq[7], chars.id("к"));
  EXPECT_EQ(seq[10], Vocab::kUnk);
  EXPECT_EQ(pad_chars("", chars), CharSequence(11, Vocab::kPad));
  EXPECT_EQ(char_ids("кот", chars).size(), 3u);
}

GrammemeLexicon cut_lexicon() {
  GrammemeLexicon lex;
  lex.add("cut", "VERB", 8.75e-5);
  lex.add("cut", "NOUN", 2.84e-5);
  return lex;
}

TEST(Grammemes, CutNounProbability) {
  const GrammemeLexicon lex = cut_lexicon();
  const auto p = grammeme_probabilities("cut", lex);
  ASSERT_EQ(p.size(), lex.slot_count());
  const double oracle = 2.84 / (2.84 + 8.75);
  EXPECT_NEAR(p[std::size_t(lex.slot("POS", "NOUN"))], 0.2451, 1e-4);
  EXPECT_NEAR(p[std::size_t(lex.slot("POS", "NOUN"))], oracle, 1e-12);
  EXPECT_NEAR(p[std::size_t(lex.slot("POS", "VERB"))], 1.0 - oracle, 1e-12);
}

TEST(Grammemes, AbsentFormIsZero) {
  const auto p = grammeme_probabilities("dog", cut_lexicon());
  for (double v : p) EXPECT_EQ(v, 0.0);
}

TEST(Grammemes, SingleAnalysisIsOneHotPerCategory) {
  GrammemeLexicon lex;
  lex.add("cats", "NOUN|Number=Plur", 3.0);
  lex.add("cat", "NOUN|Number=Sing", 5.0);
  lex.add("ran", "VERB", 1.0);
  const auto p = grammeme_probabilities("cats", lex);
  EXPECT_EQ(p[std::size_t(lex.slot("POS", "NOUN"))], 1.0);
  EXPECT_EQ(p[std::size_t(lex.slot("Number", "Plur"))], 1.0);
  const auto r = grammeme_probabilities("ran", lex);
  EXPECT_EQ(r[std::size_t(lex.slot("Number", "_"))], 1.0);
}

TEST(Grammemes, CategoriesAreSimplices) {
  const testing::SyntheticLanguage lang({});
  const GrammemeLexicon lex = lang.lexicon();
  for (const auto& form : lang.forms()) {
    const auto p = grammeme_probabilities(form, lex);
    std::size_t offset = 0;
    for (const auto& cat : lex.categories()) {
      double sum = 0;
      for (std::size_t i = 0; i < cat.values.size(); ++i) {
        EXPECT_GE(p[offset + i], 0.0);
        sum += p[offset + i];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12) << form << " " << cat.name;
      offset += cat.values.size();
    }
    EXPECT_EQ(offset, p.size());
  }
}

TEST(Grammemes, LowercaseFallbackInBatches) {
  const GrammemeLexicon lex = cut_lexicon();
  EXPECT_EQ(lookup_grammemes("Cut", lex), grammeme_probabilities("cut", lex));
}

TEST(Grammemes, SlotNamesFollowCategories) {
  const auto names = cut_lexicon().slot_names();
  EXPECT_EQ(names, (std::vector<std::string>{"POS=NOUN", "POS=VERB"}));
}

TEST(Vocab, DeterministicAcrossBuilds) {
  const testing::SyntheticLanguage lang({});
  const Corpus c = lang.sample(40, 2);
  const Vocabs a = build_vocabs(c), b = build_vocabs(c);
  EXPECT_EQ(a.chars, b.chars);
  EXPECT_EQ(a.words, b.words);
  EXPECT_EQ(a.tags, b.tags);
}

TEST(Vocab, FromSymbolsKeepsOrder) {
  const Vocab v = Vocab::from_symbols(Vocab::Kind::tags, {"B", "A"});
  EXPECT_EQ(v.id("B"), 3);
  EXPECT_EQ(v.id("A"), 4);
  EXPECT_EQ(v.reserved(), 3u);
  EXPECT_FALSE(v.find("C").has_value());
}

TEST(Vocab, LowercaseOption) {
  const Corpus c = parse_tsv_tagged("The\tD\nthe\tD\n\n");
  EXPECT_EQ(build_vocabs(c, {1, 100, true}).words.size(), 3u);
  EXPECT_EQ(build_vocabs(c, {1, 100, false}).words.size(), 4u);
}

}  // namespace
}  // namespace morphtag
