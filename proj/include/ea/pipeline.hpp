#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ea/evaluation.hpp"
#include "ea/runconfig.hpp"

namespace ea {

// exit code 3
struct MissingArtifact : std::runtime_error {
  explicit MissingArtifact(const std::string& msg) : std::runtime_error(msg) {}
};
// exit code 2
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunPaths {
  std::string dir;

  std::string corpus(const std::string& split) const { return dir + "/corpus/" + split + ".jsonl"; }
  std::string dict_file() const { return dir + "/corpus/dictionary.tsv"; }
  std::string dict_full_file() const { return dir + "/corpus/dictionary_full.tsv"; }
  std::string gazetteer_file() const { return dir + "/corpus/gazetteer.txt"; }
  std::string vocab_file() const { return dir + "/corpus/vocab.txt"; }
  std::string manifest_file() const { return dir + "/MANIFEST"; }
  std::string config_file() const { return dir + "/config.txt"; }
  std::string classifier_file() const { return dir + "/models/classifier.tsv"; }
  std::string translit_model(bool tagged) const {
    return dir + (tagged ? "/models/translit.bin" : "/models/translit_agnostic.bin");
  }
  std::string nmt_model(const std::string& method, int max_candidates = 1) const {
    std::string suffix = max_candidates > 1 ? "_mc" + std::to_string(max_candidates) : "";
    return dir + "/models/nmt_" + method + suffix + ".bin";
  }
  std::string train_log(const std::string& name) const { return dir + "/logs/train_" + name + ".log"; }
  std::string output_file(const std::string& method) const { return dir + "/outputs/" + method + ".txt"; }
  std::string report_file(const std::string& method) const { return dir + "/reports/" + method + ".txt"; }
  std::string table_file() const { return dir + "/reports/table.txt"; }
  std::string sweep_file(const std::string& axis) const { return dir + "/sweeps/" + axis + ".txt"; }

  void ensure_dirs() const;
};

struct LoadedWorld {
  std::vector<AnnotatedSentence> train, val, test, test_seen, test_unseen;
  Dictionary dict, dict_full;
  Gazetteer gazetteer;
  Vocab vocab;
  std::string world_fp;
};

void cmd_gen(const RunConfig& cfg);
LoadedWorld load_world(const RunConfig& cfg);

void train_classifier_stage(const RunConfig& cfg, const LoadedWorld& world);
void train_translit_stage(const RunConfig& cfg, const LoadedWorld& world, bool tagged);
void train_nmt_stage(const RunConfig& cfg, const LoadedWorld& world, const std::string& method);
// classifier + transliteration (when the method needs them) + the NMT model
void cmd_train(const RunConfig& cfg);

struct MethodArtifacts {
  std::string method;
  ModelConfig model_cfg;
  Transformer nmt;
  std::optional<TranslitModel> translit;
  std::optional<NationalityClassifier> classifier;
};

MethodArtifacts load_method(const RunConfig& cfg, const LoadedWorld& world,
                            const std::string& method);

struct CorpusTranslation {
  std::vector<TokenList> hypotheses;
  std::vector<CandidateSet> candidates;  // per sentence; empty for candidate-free methods
  int replacement_skipped = 0;
  int placeholder_missing = 0;
};

struct TranslateOptions {
  const Dictionary* dict_override = nullptr;  // coverage sweeps
  const NerMode* ner_override = nullptr;      // robustness sweeps
  int n_threads = 2;
};

TokenList translate_sentence(const MethodArtifacts& art, const RunConfig& cfg,
                             const LoadedWorld& world, const AnnotatedSentence& sent,
                             uint64_t sentence_stream, CandidateSet* candidates_out = nullptr,
                             CorpusTranslation* stats = nullptr,
                             const TranslateOptions& opt = {});

CorpusTranslation translate_corpus(const MethodArtifacts& art, const RunConfig& cfg,
                                   const LoadedWorld& world,
                                   const std::vector<AnnotatedSentence>& corpus,
                                   const TranslateOptions& opt = {});

struct EvalOptions {
  bool measure_latency = true;
  int latency_subset = 100;
  TranslateOptions translate;
};

EvalReport evaluate_method(const RunConfig& cfg, const LoadedWorld& world,
                           const std::string& method,
                           const std::vector<AnnotatedSentence>& test_set,
                           const EvalOptions& opt = {});

void cmd_translate(const RunConfig& cfg, const std::string& input_file,
                   const std::string& sidecar_file, const std::string& output_file);
void cmd_eval(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg, const std::string& axis);

}  // namespace ea
