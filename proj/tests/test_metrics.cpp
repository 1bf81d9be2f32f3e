#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mtme/error.hpp"
#include "mtme/metrics/metrics.hpp"
#include "oracles/bleu_oracle.hpp"
#include "oracles/meteor_oracle.hpp"
#include "oracles/ter_oracle.hpp"

namespace {

const char* kEx1Hyp = "Die Polizei probiert neue, weniger t\xc3\xb6" "dliche Werkzeuge aus, w\xc3\xa4hrend die Proteste anhalten.";
const char* kEx1Ref = "W\xc3\xa4hrend die Proteste weitergehen, testet die Polizei weniger t\xc3\xb6" "dliche Ger\xc3\xa4te";

std::string randomWords(std::mt19937& gen, int n, const std::vector<std::string>& vocab) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[gen() % vocab.size()];
  }
  return s;
}

std::vector<int> randomIds(std::mt19937& gen, std::size_t n) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(gen() % 4);
  return v;
}

}  // namespace

TEST(SentBleu, GoldenExamples) {
  EXPECT_NEAR(mtme::sentBleuValue("IT hat nicht funktioniert.", "Das hat nicht funktioniert."), 0.67, 0.005);
  EXPECT_NEAR(mtme::sentBleuValue(kEx1Hyp, kEx1Ref), 0.08, 0.02);
}

TEST(SentBleu, MatchesReferenceImplementation) {
  // Values produced by sacrebleu 2.x sentence_score with default settings.
  struct Case {
    const char* hyp;
    const char* ref;
    double bleu;
    double chrf;
  };
  const Case cases[] = {
      {"IT hat nicht funktioniert.", "Das hat nicht funktioniert.", 0.6687403050, 0.8676920540},
      {kEx1Hyp, kEx1Ref, 0.0822596470, 0.5585910232},
      {"the cat sat on the mat", "the cat is on the mat", 0.3799178428, 0.6457794206},
      {"a b c d e f", "f e d c b a", 0.1270331870, 0.1666666667},
      {"Hello world", "Hello there world, again.", 0.0956964965, 0.2752721410},
      {"3.5 dollars, please!", "3.5 dollars please", 0.2364354023, 0.7726643109},
      {"x", "y z", 0.0, 0.0},
      {"the the the", "the cat", 0.2751606041, 0.1968990380},
  };
  for (const auto& c : cases) {
    EXPECT_NEAR(mtme::sentBleuValue(c.hyp, c.ref), c.bleu, 1e-9) << c.hyp;
    EXPECT_NEAR(mtme::chrFValue(c.hyp, c.ref), c.chrf, 1e-9) << c.hyp;
  }
}

TEST(SentBleu, IdentityAndDisjoint) {
  EXPECT_DOUBLE_EQ(mtme::sentBleuValue("a b c d e", "a b c d e"), 1.0);
  EXPECT_DOUBLE_EQ(mtme::sentBleuValue("x", "x"), 1.0);
  // No n-gram matches at any order: the smoothing recurrence is never reached.
  EXPECT_DOUBLE_EQ(mtme::sentBleuValue("a b c d", "e f g h"), 0.0);
  EXPECT_DOUBLE_EQ(mtme::sentBleuValue("", "e f g h"), 0.0);
  EXPECT_THROW(mtme::sentBleuValue("a", "   "), mtme::InvalidArgument);
}

TEST(SentBleu, SmoothingRecurrenceByHand) {
  // hyp "a b x y", ref "a b c d": p1 = 2/4, p2 = 1/3, p3 and p4 have no matches.
  // Smoothed p3 = 1/(2*2), p4 = 1/(4*1).
  const double expected = std::exp((std::log(0.5) + std::log(1.0 / 3) + std::log(0.25) + std::log(0.25)) / 4);
  EXPECT_NEAR(mtme::sentBleuValue("a b x y", "a b c d"), expected, 1e-12);
}

TEST(SentBleu, OracleAgreementAndRange) {
  std::mt19937 gen(5);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "The", "the", ",", "."};
  for (int t = 0; t < 2000; ++t) {
    const auto h = randomWords(gen, static_cast<int>(gen() % 9), vocab);
    const auto r = randomWords(gen, 1 + static_cast<int>(gen() % 9), vocab);
    const double v = mtme::sentBleuValue(h, r);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0 + 1e-12);
    ASSERT_NEAR(v, oracle::sentenceBleu(mtme::tokenize13a(h), mtme::tokenize13a(r)), 1e-12) << h << " | " << r;
    ASSERT_DOUBLE_EQ(v, mtme::sentBleuValue(h + "  ", r + " \t"));
  }
}

TEST(ChrF, Examples) {
  EXPECT_DOUBLE_EQ(mtme::chrFValue("abc", "abc"), 1.0);
  EXPECT_NEAR(mtme::chrFValue("abc", "abd"), (2.0 / 3 + 0.5 + 0.0) / 3, 1e-12);
  EXPECT_NEAR(mtme::chrFValue("abc", "abd"), 0.3889, 1e-4);
  EXPECT_DOUBLE_EQ(mtme::chrFValue("", "abc"), 0.0);
  EXPECT_THROW(mtme::chrFValue("abc", ""), mtme::InvalidArgument);
  EXPECT_DOUBLE_EQ(mtme::chrFValue("a b c", "abc"), 1.0);
}

TEST(ChrF, Range) {
  std::mt19937 gen(9);
  const std::vector<std::string> vocab{"ab", "ba", "abc", "x", "yz", "\xc3\xa4"};
  for (int t = 0; t < 1000; ++t) {
    const auto h = randomWords(gen, static_cast<int>(gen() % 6), vocab);
    const auto r = randomWords(gen, 1 + static_cast<int>(gen() % 6), vocab);
    const double v = mtme::chrFValue(h, r);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0 + 1e-12);
  }
}

TEST(Ter, Examples) {
  EXPECT_DOUBLE_EQ(mtme::terValue("a b c d e", "a b c d e"), 0.0);
  EXPECT_DOUBLE_EQ(mtme::terValue("a b x d e", "a b c d e"), 0.2);
  EXPECT_DOUBLE_EQ(mtme::terValue("c d a b", "a b c d"), 0.25);
  EXPECT_DOUBLE_EQ(mtme::terValue("", "a b c d"), 1.0);
  EXPECT_DOUBLE_EQ(mtme::terValue("Das Haus.", "das haus ."), 0.0);
  EXPECT_DOUBLE_EQ(mtme::terValue("a b c", "a"), 2.0);
  EXPECT_THROW(mtme::terValue("a", ""), mtme::InvalidArgument);
}

TEST(Ter, SubstitutionOracle) {
  const std::vector<int> ref{0, 1, 2, 3, 0};
  for (std::size_t i = 0; i < ref.size(); ++i) {
    auto hyp = ref;
    hyp[i] = 7;
    EXPECT_EQ(oracle::minimumTerEdits(hyp, ref), 1);
    EXPECT_EQ(mtme::terIds(hyp, ref).edits + mtme::terIds(hyp, ref).shifts, 1);
  }
}

TEST(Ter, ZeroIffTokensEqual) {
  std::mt19937 gen(13);
  const std::vector<std::string> vocab{"a", "B", "b", "c", ".", ","};
  for (int t = 0; t < 1000; ++t) {
    const auto h = randomWords(gen, static_cast<int>(gen() % 5), vocab);
    const auto r = randomWords(gen, 1 + static_cast<int>(gen() % 5), vocab);
    const bool equal = mtme::tokenizeTercom(h) == mtme::tokenizeTercom(r);
    ASSERT_EQ(mtme::terValue(h, r) == 0.0, equal) << h << " | " << r;
  }
}

// The greedy search can never beat the exhaustive minimum, and on the large
// majority of short inputs it attains it.
TEST(Ter, GreedyBoundedByExhaustiveSearch) {
  std::mt19937 gen(17);
  int equal = 0, total = 0;
  for (int t = 0; t < 1500; ++t) {
    const auto h = randomIds(gen, gen() % 7);
    const auto r = randomIds(gen, 1 + gen() % 6);
    const auto g = mtme::terIds(h, r);
    const int best = oracle::minimumTerEdits(h, r);
    ASSERT_GE(g.edits + g.shifts, best);
    ASSERT_LE(g.edits + g.shifts, oracle::levenshtein(h, r));
    equal += g.edits + g.shifts == best;
    ++total;
  }
  EXPECT_GE(equal, total * 99 / 100);
}

TEST(Meteor, Examples) {
  EXPECT_DOUBLE_EQ(mtme::meteorLiteValue("one two three four", "one two three four"), 0.9921875);
  EXPECT_DOUBLE_EQ(mtme::meteorLiteValue("alpha beta", "gamma delta"), 0.0);
  EXPECT_DOUBLE_EQ(mtme::meteorLiteValue("running", "runs"), 0.5);
  EXPECT_DOUBLE_EQ(mtme::meteorLiteValue("", "runs"), 0.0);
  EXPECT_THROW(mtme::meteorLiteValue("a", ""), mtme::InvalidArgument);
}

TEST(Meteor, ByHandTwoChunks) {
  // hyp "a b x c", ref "a b c": m=3, P=3/4, R=1, chunks=2.
  const double p = 0.75, r = 1.0;
  const double fmean = p * r / (0.9 * p + 0.1 * r);
  const double expected = fmean * (1 - 0.5 * std::pow(2.0 / 3.0, 3));
  EXPECT_NEAR(mtme::meteorLiteValue("a b x c", "a b c"), expected, 1e-12);
}

TEST(Meteor, AlignmentMatchesBruteForce) {
  std::mt19937 gen(21);
  const std::vector<std::string> vocab{"a", "b", "c", "d"};
  for (int t = 0; t < 800; ++t) {
    mtme::TokenList h, r;
    for (std::size_t i = 0, n = gen() % 7; i < n; ++i) h.push_back(vocab[gen() % 4]);
    for (std::size_t i = 0, n = 1 + gen() % 6; i < n; ++i) r.push_back(vocab[gen() % 4]);
    const auto a = mtme::meteorAlign(h, r);
    const auto [m, c] = oracle::bestExactAlignment(h, r);
    ASSERT_EQ(a.matches, m);
    ASSERT_EQ(a.chunks, c);
  }
}

TEST(Meteor, Range) {
  std::mt19937 gen(23);
  const std::vector<std::string> vocab{"run", "running", "runs", "cat", "cats", "The", "the"};
  for (int t = 0; t < 500; ++t) {
    const auto h = randomWords(gen, static_cast<int>(gen() % 7), vocab);
    const auto r = randomWords(gen, 1 + static_cast<int>(gen() % 7), vocab);
    const double v = mtme::meteorLiteValue(h, r);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(Porter, KnownStems) {
  EXPECT_EQ(mtme::porterStem("running"), "run");
  EXPECT_EQ(mtme::porterStem("runs"), "run");
  EXPECT_EQ(mtme::porterStem("caresses"), "caress");
  EXPECT_EQ(mtme::porterStem("ponies"), "poni");
  EXPECT_EQ(mtme::porterStem("relational"), "relat");
  EXPECT_EQ(mtme::porterStem("generalization"), "gener");
  EXPECT_EQ(mtme::porterStem("hopping"), "hop");
  EXPECT_EQ(mtme::porterStem("a"), "a");
}

TEST(ScoreAll, Contract) {
  auto s = mtme::scoreAll("a b c", "a b c", {"sentbleu", "ter"});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s.at("sentbleu").value, 1.0);
  EXPECT_TRUE(s.at("sentbleu").higherIsBetter);
  EXPECT_DOUBLE_EQ(s.at("ter").value, 0.0);
  EXPECT_FALSE(s.at("ter").higherIsBetter);
  EXPECT_THROW(mtme::scoreAll("a", "a", {"external:comet"}), mtme::InvalidArgument);
  EXPECT_THROW(mtme::scoreAll("a", "a", {"nosuch"}), mtme::InvalidArgument);
  EXPECT_DOUBLE_EQ(mtme::scoreAll("", "x", {"chrf"}).at("chrf").value, 0.0);
  auto all = mtme::scoreAll("one two three four", "one two three four", mtme::computableMetrics());
  EXPECT_DOUBLE_EQ(all.at("meteor").value, 0.9921875);
  EXPECT_DOUBLE_EQ(all.at("chrf").value, 1.0);
}
