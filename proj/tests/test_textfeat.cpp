#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hal/errors.hpp"
#include "hal/textfeat.hpp"

using namespace hal;
using namespace hal::textfeat;

using Tokens = std::vector<std::string>;

TEST(Tokenize, RulesAppliedByHand) {
  EXPECT_EQ(tokenize("Buffer overflow in X"), (Tokens{"buffer", "overflow"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("OpenSuse 13.1"), (Tokens{"opensuse", "13.1"}));
  EXPECT_EQ(tokenize("Fixed in 2016, see the README."), (Tokens{"fixed", "see", "readme"}));
  EXPECT_EQ(tokenize("Version 13.1. released"), (Tokens{"version", "13.1", "released"}));
  EXPECT_EQ(tokenize("file.name parsing"), (Tokens{"file", "name", "parsing"}));
}

TEST(Tokenize, StopWordsShipWithTheLibrary) {
  EXPECT_TRUE(is_stop_word("the"));
  EXPECT_TRUE(is_stop_word("in"));
  EXPECT_FALSE(is_stop_word("overflow"));
  EXPECT_GT(stop_words().size(), 100u);
}

TEST(Vocabulary, MinDfAndLexicographicOrder) {
  const std::vector<std::string> docs = {"stack overflow kernel", "heap overflow parser", "kernel race"};
  const auto vocab = build_vocabulary(docs, 2);
  EXPECT_EQ(vocab.terms(), (Tokens{"kernel", "overflow"}));
  EXPECT_EQ(vocab.index_of("overflow"), 1);
  EXPECT_EQ(vocab.index_of("heap"), -1);
  EXPECT_EQ(vocab.corpus_size(), 3u);
  EXPECT_EQ(build_vocabulary(docs, 2), vocab);
  EXPECT_THROW(build_vocabulary(std::vector<std::string>{}, 1), ValidationError);
  EXPECT_THROW(build_vocabulary(docs, 0), ValidationError);
}

TEST(Tfidf, WeightsMatchHandComputation) {
  const std::vector<std::string> docs = {"alpha alpha beta", "beta gamma", "gamma delta"};
  const auto vocab = build_vocabulary(docs, 1);
  const auto v = vectorize_tfidf("alpha alpha beta", vocab);
  // N=3; alpha df 1, tf 2; beta df 2, tf 1
  const double wa = (1 + std::log(2.0)) * (std::log(4.0 / 2.0) + 1);
  const double wb = 1.0 * (std::log(4.0 / 3.0) + 1);
  const double norm = std::sqrt(wa * wa + wb * wb);
  EXPECT_NEAR(v.values[vocab.index_of("alpha")], wa / norm, 1e-12);
  EXPECT_NEAR(v.values[vocab.index_of("beta")], wb / norm, 1e-12);
  EXPECT_NEAR(v.norm(), 1.0, 1e-9);
  for (double x : v.values) EXPECT_GE(x, 0.0);
}

TEST(Tfidf, ZeroOneHotAndScaleInvariance) {
  const std::vector<std::string> docs = {"kernel overflow", "kernel race"};
  const auto vocab = build_vocabulary(docs, 1);
  EXPECT_TRUE(vectorize_tfidf("nothing known", vocab).is_zero());
  const auto one = vectorize_tfidf("race", vocab);
  EXPECT_DOUBLE_EQ(one.values[vocab.index_of("race")], 1.0);
  EXPECT_EQ(vectorize_tfidf("race race", vocab), one);
}

TEST(Embeddings, LoadNormalizesAndChecksDimensions) {
  std::istringstream in("id,v0,v1,v2,v3\nCVE-1,3,4,0,0\nCVE-2,1,0,0,0\nCVE-3,0,0,0,2\n");
  const auto e = load_embeddings(in);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e.at("CVE-1").dimension(), 4u);
  EXPECT_DOUBLE_EQ(e.at("CVE-1").values[0], 0.6);
  EXPECT_DOUBLE_EQ(e.at("CVE-1").values[1], 0.8);
  std::istringstream ragged("CVE-1,1,2,3,4\nCVE-2,1,2,3\n");
  EXPECT_THROW(load_embeddings(ragged), FormatError);
  std::istringstream text("CVE-1,1,two,3\n");
  EXPECT_THROW(load_embeddings(text), FormatError);
}

TEST(Embeddings, WriteLoadRoundTrip) {
  std::vector<std::pair<std::string, std::string>> texts = {{"CVE-1", "kernel overflow"}, {"CVE-2", "sql injection"}};
  const auto e = hashed_embeddings(texts, 8, 1);
  std::stringstream io;
  write_embeddings(io, e);
  const auto back = load_embeddings(io);
  for (const auto& [id, v] : e) {
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(back.at(id).values[i], v.values[i], 1e-15);
  }
}

TEST(Cosine, Conventions) {
  const FeatureVector a{{1, 0}}, b{{0, 1}}, c{{-1, 0}}, z{{0, 0}};
  EXPECT_DOUBLE_EQ(cosine_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, c), 2.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, z), 1.0);
  EXPECT_THROW(cosine_distance(a, FeatureVector{{1, 0, 0}}), ValidationError);
}

TEST(Cosine, SymmetricOnRandomVectors) {
  std::vector<std::pair<std::string, std::string>> texts;
  for (int i = 0; i < 20; ++i) texts.emplace_back("id" + std::to_string(i), "token" + std::to_string(i % 7) + " shared");
  const auto e = hashed_embeddings(texts, 12, 3);
  for (const auto& [i, a] : e) {
    for (const auto& [j, b] : e) {
      EXPECT_EQ(cosine_distance(a, b), cosine_distance(b, a));
      const double d = cosine_distance(a, b);
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 2.0);
    }
    EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-12);
  }
}
