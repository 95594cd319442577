#include "ea/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "ea/corpus.hpp"

namespace ea {

namespace {

void softmax_inplace(std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace

std::vector<std::pair<int, double>> NationalityClassifier::features(const TokenList& entity,
                                                                    const TokenList& sentence) const {
  std::map<int, double> acc;
  std::string s = join(entity, "_");
  for (int n = 1; n <= 3; ++n) {
    if (static_cast<int>(s.size()) < n) break;
    for (size_t i = 0; i + n <= s.size(); ++i) {
      std::string gram = std::to_string(n) + ":" + s.substr(i, n);
      int bucket = static_cast<int>(fnv1a64(gram) % static_cast<uint64_t>(feature_dim));
      acc[bucket] += 1.0;
    }
  }
  std::set<std::string> sent_set(sentence.begin(), sentence.end());
  for (size_t k = 0; k < context_nats_.size(); ++k) {
    if (sent_set.count(context_token(context_nats_[k])))
      acc[feature_dim + static_cast<int>(k)] += 1.0;
  }
  acc[feature_dim + static_cast<int>(context_nats_.size())] = 1.0;  // bias
  return {acc.begin(), acc.end()};
}

std::vector<double> NationalityClassifier::logits(const TokenList& entity,
                                                  const TokenList& sentence) const {
  auto feats = features(entity, sentence);
  std::vector<double> z(labels_.size(), 0.0);
  for (size_t l = 0; l < labels_.size(); ++l) {
    const double* row = w_.row(l);
    double s = 0.0;
    for (const auto& [j, v] : feats) s += row[j] * v;
    z[l] = s;
  }
  return z;
}

std::vector<double> NationalityClassifier::probabilities(const TokenList& entity,
                                                         const TokenList& sentence) const {
  auto z = logits(entity, sentence);
  softmax_inplace(z);
  return z;
}

Nationality NationalityClassifier::classify(const TokenList& entity, const TokenList& sentence) const {
  if (entity.empty() || join(entity).empty()) return kOther;
  auto z = logits(entity, sentence);
  // labels_ is sorted, so the first strict maximum is the lexicographically
  // smallest among ties.
  size_t best = 0;
  for (size_t l = 1; l < z.size(); ++l)
    if (z[l] > z[best]) best = l;
  return labels_[best];
}

NationalityClassifier NationalityClassifier::train(const std::vector<ClassifierExample>& examples,
                                                   const ClassifierConfig& config,
                                                   const std::vector<Nationality>& nationalities) {
  require(!examples.empty(), "classifier: no training examples");

  std::map<Nationality, int> counts;
  for (const auto& ex : examples) counts[ex.label]++;

  NationalityClassifier clf;
  clf.feature_dim = config.feature_dim;
  clf.context_nats_ = nationalities;
  std::sort(clf.context_nats_.begin(), clf.context_nats_.end());

  std::set<Nationality> label_set = {kOther};
  for (const auto& [nat, c] : counts)
    if (c >= config.min_label_count) label_set.insert(nat);
  clf.labels_.assign(label_set.begin(), label_set.end());
  require(clf.labels_.size() >= 2, "classifier: need at least two labels after thresholding");

  std::map<Nationality, int> label_index;
  for (size_t i = 0; i < clf.labels_.size(); ++i) label_index[clf.labels_[i]] = static_cast<int>(i);

  const int dim = clf.feature_dim + static_cast<int>(clf.context_nats_.size()) + 1;
  const int n_labels = static_cast<int>(clf.labels_.size());
  clf.w_.resize(n_labels, dim);

  std::vector<std::vector<std::pair<int, double>>> feats;
  std::vector<int> targets;
  feats.reserve(examples.size());
  for (const auto& ex : examples) {
    feats.push_back(clf.features(ex.entity, ex.sentence));
    auto it = label_index.find(ex.label);
    targets.push_back(it == label_index.end() ? label_index.at(kOther) : it->second);
  }

  // Full-batch gradient descent; everything here is order-fixed, so training
  // is bit-deterministic.
  Matrix grad(n_labels, dim);
  double prev_loss = std::numeric_limits<double>::infinity();
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    grad.zero();
    double loss = 0.0;
    for (size_t i = 0; i < feats.size(); ++i) {
      std::vector<double> z(n_labels, 0.0);
      for (int l = 0; l < n_labels; ++l) {
        double s = 0.0;
        const double* row = clf.w_.row(l);
        for (const auto& [j, v] : feats[i]) s += row[j] * v;
        z[l] = s;
      }
      softmax_inplace(z);
      loss -= std::log(std::max(z[targets[i]], 1e-300));
      for (int l = 0; l < n_labels; ++l) {
        double g = (z[l] - (l == targets[i] ? 1.0 : 0.0)) * inv_n;
        double* grow = grad.row(l);
        for (const auto& [j, v] : feats[i]) grow[j] += g * v;
      }
    }
    loss *= inv_n;
    for (size_t k = 0; k < clf.w_.size(); ++k) clf.w_.data()[k] -= config.learning_rate * grad.data()[k];
    if (std::abs(prev_loss - loss) < config.loss_tolerance) break;
    prev_loss = loss;
  }
  return clf;
}

void NationalityClassifier::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "classifier: cannot write " + path);
  os << "#labels";
  for (const auto& l : labels_) os << "\t" << l;
  os << "\n#contexts";
  for (const auto& c : context_nats_) os << "\t" << c;
  os << "\n#feature_dim\t" << feature_dim << "\n";
  os.precision(17);
  for (size_t l = 0; l < labels_.size(); ++l) {
    const double* row = w_.row(l);
    for (size_t j = 0; j < w_.cols(); ++j) {
      if (row[j] == 0.0) continue;
      std::string fname;
      if (j < static_cast<size_t>(feature_dim))
        fname = std::to_string(j);
      else if (j < static_cast<size_t>(feature_dim) + context_nats_.size())
        fname = "ctx:" + context_nats_[j - feature_dim];
      else
        fname = "bias";
      os << fname << "\t" << labels_[l] << "\t" << row[j] << "\n";
    }
  }
}

NationalityClassifier NationalityClassifier::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "classifier: cannot read " + path);
  NationalityClassifier clf;
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("#labels", 0) == 0,
          "classifier: bad file " + path);
  {
    auto f = split_on(line, '\t');
    clf.labels_.assign(f.begin() + 1, f.end());
  }
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("#contexts", 0) == 0,
          "classifier: bad file " + path);
  {
    auto f = split_on(line, '\t');
    clf.context_nats_.assign(f.begin() + 1, f.end());
  }
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("#feature_dim", 0) == 0,
          "classifier: bad file " + path);
  clf.feature_dim = std::stoi(split_on(line, '\t')[1]);

  std::map<Nationality, int> label_index;
  for (size_t i = 0; i < clf.labels_.size(); ++i) label_index[clf.labels_[i]] = static_cast<int>(i);
  const int dim = clf.feature_dim + static_cast<int>(clf.context_nats_.size()) + 1;
  clf.w_.resize(clf.labels_.size(), dim);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_on(line, '\t');
    require(f.size() == 3, "classifier: bad line " + line);
    int j;
    if (f[0] == "bias")
      j = dim - 1;
    else if (f[0].rfind("ctx:", 0) == 0) {
      auto it = std::find(clf.context_nats_.begin(), clf.context_nats_.end(), f[0].substr(4));
      require(it != clf.context_nats_.end(), "classifier: unknown context " + f[0]);
      j = clf.feature_dim + static_cast<int>(it - clf.context_nats_.begin());
    } else {
      j = std::stoi(f[0]);
    }
    clf.w_(label_index.at(f[1]), j) = std::stod(f[2]);
  }
  return clf;
}

}  // namespace ea
