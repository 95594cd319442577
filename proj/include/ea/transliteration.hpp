#pragma once

#include <string>
#include <vector>

#include "ea/classifier.hpp"
#include "ea/corpus.hpp"
#include "ea/inference.hpp"
#include "ea/kv.hpp"
#include "ea/training.hpp"

namespace ea {

struct TranslitPair {
  Nationality nationality;
  TokenList src_surface;
  TokenList tgt_surface;
};

struct TranslitConfig {
  ModelConfig model;  // char-level transformer, same core as the NMT model
  TrainConfig train;
  bool use_nationality_tag = true;  // off: the w/o-Nationality ablation

  TranslitConfig() {
    model.layers = 2;
    model.hidden_dim = 48;
    model.heads = 4;
    model.ffn_dim = 96;
    model.dropout = 0.1;
    model.max_src_len = 40;
    model.max_tgt_len = 48;
    train.max_steps = 6000;
    train.warmup_steps = 600;
    train.peak_lr = 2.5e-3;
  }
};

// Multi-token surfaces travel through the char model joined by '_' and are
// split back on it after decoding.
constexpr char kTokenBoundary = '_';

AnnotatedSentence translit_pair_to_sentence(const TranslitPair& pair, bool tagged);

// Character-level encoder-decoder with an optional nationality tag as the
// first input token.
class TranslitModel {
 public:
  static TranslitModel train(const std::vector<TranslitPair>& pairs, const TranslitConfig& cfg,
                             const std::vector<Nationality>& nationalities,
                             const std::string& log_path = "");

  // Greedy decode, generation cap 4*|src|+4 characters.
  TokenList transliterate(const Nationality& nat, const TokenList& src_surface) const;

  bool tagged() const { return tagged_; }
  const Vocab& char_vocab() const { return vocab_; }
  Transformer& transformer() { return model_; }
  const Transformer& transformer() const { return model_; }

  void save(const std::string& path, const KvMap& extra_meta = {}) const;
  static TranslitModel load(const std::string& path);

 private:
  Vocab vocab_;
  Transformer model_;
  bool tagged_ = true;
};

// Extraction hook: classify (when the model is nationality-aware), tag,
// transliterate. A null classifier falls back to OTHER.
TranslitFn make_translit_fn(const TranslitModel* model, const NationalityClassifier* classifier);

// Conflict items carry a context sentence so the classifier has a signal on
// letter-ambiguous surfaces.
struct ConflictItem {
  TranslitPair pair;
  TokenList sentence;
};

struct TranslitDataset {
  std::vector<TranslitPair> train_pairs;    // pool pairs plus the conflict block
  std::vector<TranslitPair> test_pairs;     // held-out ordinary pairs
  std::vector<ConflictItem> conflict_test;  // held-out cross-nationality conflicts
};

// Dictionary pairs (primary variants) teach the per-nationality rules; the
// drill block adds fresh uniform-letter surfaces per nationality for rule
// generalization; the conflict block renders the same surface under every
// nationality, so surface letters alone cannot resolve those. `known`
// keeps drill/conflict surfaces disjoint from every real entity surface.
TranslitDataset build_translit_dataset(const Dictionary& dict, const Gazetteer& known,
                                       const WorldConfig& cfg, int conflict_train_surfaces = 48,
                                       int conflict_test_surfaces = 32,
                                       int drill_per_nationality = 300);

// (entity, sentence, nationality) examples from the training corpus.
std::vector<ClassifierExample> build_classifier_dataset(const std::vector<AnnotatedSentence>& train);

}  // namespace ea
