#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ea/extraction.hpp"
#include "ea/model.hpp"
#include "ea/vocab.hpp"

namespace ea {

struct TrainConfig {
  int batch_size = 32;
  int max_steps = 8000;
  double beta1 = 0.9, beta2 = 0.98, adam_eps = 1e-9;
  double peak_lr = 3e-4;
  int warmup_steps = 400;
  double grad_clip = 1.0;
  uint64_t seed = 1;
  int checkpoint_every = 0;  // 0: final checkpoint only
  int log_every = 200;
  int num_threads = 0;  // 0: hardware concurrency (capped at 8)

  void validate() const {
    require(batch_size > 0 && max_steps >= 0, "train: bad batch/steps");
    require(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1, "train: bad betas");
    require(peak_lr > 0 && adam_eps > 0 && grad_clip > 0, "train: bad optimizer values");
    require(warmup_steps > 0, "train: warmup must be positive");
    if (max_steps > 0)
      require(warmup_steps < max_steps, "train: warmup must be < max_steps");
  }

  int threads() const;

  std::map<std::string, std::string> to_kv() const;
  static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
};

// 0 at step 0, linear to peak at warmup, then inverse-sqrt decay.
double lr_at(const TrainConfig& cfg, int step);

// Scales grads so the global norm is at most max_norm; returns the pre-clip norm.
double clip_global_norm(ParamStore& grads, double max_norm);

struct TrainExample {
  EncoderInput enc;
  DecoderInput dec;
};

// Assembles tensors for one sentence: candidates are extracted in TRAIN mode
// (gold target surface as the reference window), the prefix is masked out of
// the loss, labels are the shifted target.
struct ExampleBuilder {
  const Vocab* vocab = nullptr;
  const Dictionary* dict = nullptr;
  TranslitFn translit;
  NerMode ner_mode;
  const Gazetteer* gazetteer = nullptr;
  ModelConfig model_cfg;
  uint64_t seed = 1;

  TrainExample build(const AnnotatedSentence& sent, uint64_t stream) const;
};

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double ms_per_step = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double final_loss = 0.0;
};

struct Adam {
  explicit Adam(const ParamStore& params) : m_(params.zeros_like()), v_(params.zeros_like()) {}
  void step(ParamStore& params, const ParamStore& grads, double lr, const TrainConfig& cfg);
  int t() const { return t_; }

 private:
  ParamStore m_, v_;
  int t_ = 0;
};

// Deterministic loop: fixed shuffle order, per-example dropout streams,
// per-epoch example rebuild, global-norm clipping, Adam. Aborts on a
// non-finite loss. checkpoint_fn (optional) runs at every checkpoint_every
// steps and at the end; its string is appended to the log file.
TrainResult train_model(Transformer& model, const std::vector<AnnotatedSentence>& data,
                        const ExampleBuilder& builder, const TrainConfig& cfg,
                        const std::string& log_path = "",
                        const std::function<std::string(const Transformer&, int)>& checkpoint_fn = {});

}  // namespace ea
