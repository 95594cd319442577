#pragma once

#include <string>

#include "ea/corpus.hpp"
#include "ea/extraction.hpp"
#include "ea/inference.hpp"
#include "ea/kv.hpp"
#include "ea/training.hpp"
#include "ea/transliteration.hpp"

namespace ea {

KvMap world_to_kv(const WorldConfig& cfg);
WorldConfig world_from_kv(const KvMap& kv);

KvMap ner_to_kv(const NerMode& mode);
NerMode ner_from_kv(const KvMap& kv);

inline const std::vector<std::string> kMethods = {"plain",      "dict",     "replace", "placeholder",
                                                  "annotate",   "ea",       "encoder-attend"};

// Everything one experiment needs, serialized as flat key=value text with
// section prefixes. Flags override file values in the CLI.
struct RunConfig {
  WorldConfig world;
  ModelConfig model;  // NMT core; vocab_size is filled at train time
  TrainConfig train;
  DecodeConfig decode;
  TranslitConfig translit;
  ClassifierConfig classifier;
  NerMode ner;  // inference-time entity detection
  std::string method = "ea";
  std::string run_dir = "run";
  bool use_translit = true;

  RunConfig() {
    model.use_prefix = true;
    model.use_type_embeddings = true;
  }

  void validate() const;

  KvMap to_kv() const;
  static RunConfig from_kv(const KvMap& kv);

  // Fingerprint of the world section: the identity every derived artifact
  // must agree on across stages.
  std::string world_fingerprint() const { return kv_fingerprint(world_to_kv(world)); }
  // Fingerprint of the full config.
  std::string fingerprint() const { return kv_fingerprint(to_kv()); }

  // Model flags implied by a method name.
  ModelConfig model_for_method(const std::string& m) const;
};

}  // namespace ea
