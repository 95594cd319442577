#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ea/classifier.hpp"
#include "ea/corpus.hpp"

using namespace ea;

namespace {

const std::vector<Nationality> kNats = {"ALPHA", "BETA", "GAMMA", "OTHER"};

std::vector<ClassifierExample> separable_set(int per_class) {
  // disjoint letter inventories -> linearly separable
  std::vector<ClassifierExample> out;
  Rng rng(41);
  for (int i = 0; i < per_class; ++i) {
    for (auto& [nat, letters] : std::map<Nationality, std::string>{{"ALPHA", "abcdefghi"},
                                                                   {"BETA", "jklmnopqr"}}) {
      std::string tok;
      for (int k = 0; k < 4; ++k) tok.push_back(letters[rng.index(letters.size())]);
      ClassifierExample ex;
      ex.entity = {tok};
      ex.sentence = {"w1", tok, "w2"};
      ex.label = nat;
      out.push_back(ex);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("separable two-class set reaches training accuracy 1.0") {
  auto examples = separable_set(60);
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  int correct = 0;
  for (const auto& ex : examples)
    if (clf.classify(ex.entity, ex.sentence) == ex.label) correct++;
  CHECK(correct == static_cast<int>(examples.size()));
}

TEST_CASE("rare labels collapse to OTHER before training") {
  auto examples = separable_set(60);
  for (int i = 0; i < 5; ++i) {
    ClassifierExample ex;
    ex.entity = {"zzzz"};
    ex.sentence = {"zzzz"};
    ex.label = "GAMMA";  // below threshold
    examples.push_back(ex);
  }
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  for (const auto& l : clf.labels()) CHECK(l != "GAMMA");
  // GAMMA-labelled examples trained as OTHER
  CHECK(std::find(clf.labels().begin(), clf.labels().end(), kOther) != clf.labels().end());
}

TEST_CASE("training is deterministic") {
  auto examples = separable_set(40);
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier a = NationalityClassifier::train(examples, cfg, kNats);
  NationalityClassifier b = NationalityClassifier::train(examples, cfg, kNats);
  for (const auto& ex : examples) {
    auto pa = a.probabilities(ex.entity, ex.sentence);
    auto pb = b.probabilities(ex.entity, ex.sentence);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  }
}

TEST_CASE("probabilities sum to one") {
  auto examples = separable_set(40);
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  for (const auto& ex : examples) {
    auto p = clf.probabilities(ex.entity, ex.sentence);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-6);
  }
}

TEST_CASE("empty entity classifies as OTHER; same input gives same output") {
  auto examples = separable_set(40);
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  CHECK(clf.classify({}, {"w"}) == kOther);
  TokenList e{"abcd"};
  TokenList s{"w1", "abcd"};
  CHECK(clf.classify(e, s) == clf.classify(e, s));
}

TEST_CASE("context token indicators carry signal when letters are ambiguous") {
  // uniform-letter surfaces, label determined only by the context token
  std::vector<ClassifierExample> examples;
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    std::string tok;
    for (int k = 0; k < 4; ++k) tok.push_back(static_cast<char>('a' + rng.index(26)));
    Nationality nat = kNats[i % 2 == 0 ? 0 : 1];
    ClassifierExample ex;
    ex.entity = {tok};
    ex.sentence = {"w1", context_token(nat), tok, "w2"};
    ex.label = nat;
    examples.push_back(ex);
  }
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  int correct = 0;
  for (const auto& ex : examples)
    if (clf.classify(ex.entity, ex.sentence) == ex.label) correct++;
  CHECK(static_cast<double>(correct) / examples.size() > 0.95);
}

TEST_CASE("single-label degenerate input is rejected") {
  std::vector<ClassifierExample> examples;
  for (int i = 0; i < 30; ++i) examples.push_back({{"abcd"}, {"abcd"}, "OTHER"});
  ClassifierConfig cfg;
  cfg.min_label_count = 5;
  CHECK_THROWS(NationalityClassifier::train(examples, cfg, kNats));
}

TEST_CASE("classifier weights round trip through the tsv file") {
  auto examples = separable_set(30);
  ClassifierConfig cfg;
  cfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(examples, cfg, kNats);
  clf.save("/tmp/ea_clf_test.tsv");
  NationalityClassifier back = NationalityClassifier::load("/tmp/ea_clf_test.tsv");
  for (const auto& ex : examples) {
    CHECK(back.classify(ex.entity, ex.sentence) == clf.classify(ex.entity, ex.sentence));
    auto pa = clf.probabilities(ex.entity, ex.sentence);
    auto pb = back.probabilities(ex.entity, ex.sentence);
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
  }
}
