#pragma once

#include <string>
#include <vector>

#include "ea/matrix.hpp"
#include "ea/types.hpp"
#include "ea/util.hpp"

namespace ea {

struct ClassifierExample {
  TokenList entity;
  TokenList sentence;
  Nationality label;
};

struct ClassifierConfig {
  int feature_dim = 4096;    // hashed n-gram buckets, n in {1,2,3}
  int min_label_count = 50;  // labels rarer than this collapse to OTHER
  double learning_rate = 0.5;
  int max_epochs = 300;
  double loss_tolerance = 1e-5;
};

// Multinomial logistic model over hashed character n-grams of the entity plus
// per-nationality context-token presence indicators.
class NationalityClassifier {
 public:
  static NationalityClassifier train(const std::vector<ClassifierExample>& examples,
                                     const ClassifierConfig& config,
                                     const std::vector<Nationality>& nationalities);

  Nationality classify(const TokenList& entity, const TokenList& sentence) const;
  std::vector<double> probabilities(const TokenList& entity, const TokenList& sentence) const;

  const std::vector<Nationality>& labels() const { return labels_; }

  void save(const std::string& path) const;
  static NationalityClassifier load(const std::string& path);

 private:
  std::vector<std::pair<int, double>> features(const TokenList& entity,
                                               const TokenList& sentence) const;
  std::vector<double> logits(const TokenList& entity, const TokenList& sentence) const;

  std::vector<Nationality> labels_;        // sorted; always contains OTHER
  std::vector<Nationality> context_nats_;  // context-token indicator order
  int feature_dim = 0;
  Matrix w_;  // labels x (feature_dim + |context_nats| + 1 bias)
};

}  // namespace ea
