#include "ea/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

namespace ea {

int TrainConfig::threads() const {
  if (num_threads > 0) return num_threads;
  unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

std::map<std::string, std::string> TrainConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["batch_size"] = std::to_string(batch_size);
  kv["max_steps"] = std::to_string(max_steps);
  kv["beta1"] = std::to_string(beta1);
  kv["beta2"] = std::to_string(beta2);
  kv["adam_eps"] = std::to_string(adam_eps);
  kv["peak_lr"] = std::to_string(peak_lr);
  kv["warmup_steps"] = std::to_string(warmup_steps);
  kv["grad_clip"] = std::to_string(grad_clip);
  kv["seed"] = std::to_string(seed);
  kv["checkpoint_every"] = std::to_string(checkpoint_every);
  kv["log_every"] = std::to_string(log_every);
  kv["num_threads"] = std::to_string(num_threads);
  return kv;
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    require(it != kv.end(), "train config: missing key " + k);
    return it->second;
  };
  c.batch_size = std::stoi(get("batch_size"));
  c.max_steps = std::stoi(get("max_steps"));
  c.beta1 = std::stod(get("beta1"));
  c.beta2 = std::stod(get("beta2"));
  c.adam_eps = std::stod(get("adam_eps"));
  c.peak_lr = std::stod(get("peak_lr"));
  c.warmup_steps = std::stoi(get("warmup_steps"));
  c.grad_clip = std::stod(get("grad_clip"));
  c.seed = std::stoull(get("seed"));
  c.checkpoint_every = std::stoi(get("checkpoint_every"));
  c.log_every = std::stoi(get("log_every"));
  c.num_threads = std::stoi(get("num_threads"));
  return c;
}

double lr_at(const TrainConfig& cfg, int step) {
  if (step <= 0) return 0.0;
  double w = static_cast<double>(cfg.warmup_steps);
  double s = static_cast<double>(step);
  return cfg.peak_lr * std::min(s / w, std::sqrt(w / s));
}

double clip_global_norm(ParamStore& grads, double max_norm) {
  double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

TrainExample ExampleBuilder::build(const AnnotatedSentence& sent, uint64_t stream) const {
  require(vocab && dict, "example builder: vocab/dictionary unset");
  TrainExample ex;
  Rng rng(seed, 0xE7A ^ stream);

  CandidateSet cands;
  const bool wants_candidates =
      model_cfg.use_prefix || model_cfg.attend_site == AttendSite::ENCODER;
  if (wants_candidates) {
    cands = extract_candidates(sent, *dict, translit, ner_mode, SelectMode::TRAIN, gazetteer, rng,
                               model_cfg.max_candidates);
  }

  std::vector<EntitySpan> tag_spans = sent.entities;
  if (ner_mode.kind != NerMode::Kind::GOLD) {
    tag_spans.clear();
    for (const auto& c : cands) tag_spans.push_back(c.span);
  }
  std::vector<int> src_ids = vocab->encode(sent.src_tokens);
  std::vector<int> tags = model_cfg.use_type_embeddings
                              ? make_type_tags(src_ids.size(), tag_spans)
                              : std::vector<int>(src_ids.size(), 0);

  const bool inner_sep = model_cfg.max_candidates > 1;
  if (model_cfg.attend_site == AttendSite::ENCODER) {
    ex.enc = build_encoder_input_with_candidates(src_ids, tags, cands, *vocab,
                                                 model_cfg.max_candidates, inner_sep);
    ex.dec = make_decoder_input({}, vocab->encode(sent.tgt_tokens));
  } else {
    ex.enc = plain_encoder_input(src_ids, tags);
    std::vector<int> prefix;
    if (model_cfg.use_prefix) {
      PrefixResult pr = build_decoder_prefix(cands, *vocab, model_cfg.max_candidates, inner_sep,
                                             model_cfg.max_prefix_len);
      prefix = std::move(pr.ids);
    }
    ex.dec = make_decoder_input(prefix, vocab->encode(sent.tgt_tokens));
  }
  return ex;
}

void Adam::step(ParamStore& params, const ParamStore& grads, double lr, const TrainConfig& cfg) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t_);
  for (auto& [name, p] : params.tensors) {
    Matrix& m = m_.at(name);
    Matrix& v = v_.at(name);
    const Matrix& g = grads.at(name);
    double* __restrict pp = p.data();
    double* __restrict pm = m.data();
    double* __restrict pv = v.data();
    const double* __restrict pg = g.data();
    for (size_t i = 0; i < p.size(); ++i) {
      pm[i] = cfg.beta1 * pm[i] + (1.0 - cfg.beta1) * pg[i];
      pv[i] = cfg.beta2 * pv[i] + (1.0 - cfg.beta2) * pg[i] * pg[i];
      double mhat = pm[i] / bc1;
      double vhat = pv[i] / bc2;
      pp[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

namespace {

struct WorkerSlot {
  ParamStore grads;
  double loss_sum = 0.0;
  EncoderCache enc;
  DecoderCache dec;
  Matrix dlogits;
};

}  // namespace

TrainResult train_model(Transformer& model, const std::vector<AnnotatedSentence>& data,
                        const ExampleBuilder& builder, const TrainConfig& cfg,
                        const std::string& log_path,
                        const std::function<std::string(const Transformer&, int)>& checkpoint_fn) {
  cfg.validate();
  require(!data.empty(), "train: empty dataset");

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::binary);
    require(static_cast<bool>(log), "train: cannot write log " + log_path);
    log.precision(10);
  }

  const int n_threads = cfg.threads();
  std::vector<WorkerSlot> slots;
  for (int t = 0; t < n_threads; ++t) slots.push_back({model.params().zeros_like()});
  ParamStore batch_grads = model.params().zeros_like();
  Adam adam(model.params());

  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<TrainExample> examples(data.size());
  int epoch = -1;
  size_t cursor = order.size();  // force initial shuffle+rebuild

  auto rebuild_epoch = [&]() {
    ++epoch;
    Rng shuffle_rng(cfg.seed, 0x5F0 ^ static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);
    // one candidate-selection pass per epoch, re-derived deterministically
    for (size_t i = 0; i < data.size(); ++i)
      examples[i] = builder.build(data[i], (static_cast<uint64_t>(epoch) << 32) ^ i);
    cursor = 0;
  };

  TrainResult result;
  using clock = std::chrono::steady_clock;
  for (int step = 0; step < cfg.max_steps; ++step) {
    auto t0 = clock::now();
    std::vector<size_t> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) rebuild_epoch();
      batch.push_back(order[cursor++]);
    }

    auto worker = [&](int tid) {
      WorkerSlot& slot = slots[tid];
      slot.grads.zero();
      slot.loss_sum = 0.0;
      size_t lo = batch.size() * tid / n_threads;
      size_t hi = batch.size() * (tid + 1) / n_threads;
      for (size_t b = lo; b < hi; ++b) {
        const TrainExample& ex = examples[batch[b]];
        Rng drop_rng(cfg.seed, 0xD120 ^ (static_cast<uint64_t>(step) << 16) ^ b);
        Rng* dr = model.config().dropout > 0.0 ? &drop_rng : nullptr;
        model.encode(ex.enc, slot.enc, dr);
        model.decode(ex.dec, slot.enc.states, slot.dec, dr);
        slot.loss_sum +=
            Transformer::loss(slot.dec.logits, ex.dec.labels, ex.dec.loss_mask, &slot.dlogits);
        model.backward(slot.enc, slot.dec, slot.dlogits, slot.grads);
      }
    };
    if (n_threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker, t);
      worker(0);
      for (auto& th : pool) th.join();
    }

    batch_grads.zero();
    double loss = 0.0;
    for (int t = 0; t < n_threads; ++t) {  // fixed reduction order
      batch_grads.add_scaled(slots[t].grads, 1.0);
      loss += slots[t].loss_sum;
    }
    loss /= static_cast<double>(cfg.batch_size);
    require(std::isfinite(loss), "train: loss diverged (non-finite) at step " + std::to_string(step));
    batch_grads.scale(1.0 / static_cast<double>(cfg.batch_size));

    clip_global_norm(batch_grads, cfg.grad_clip);

    double lr = lr_at(cfg, step);
    adam.step(model.params(), batch_grads, lr, cfg);

    double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    result.final_loss = loss;
    bool log_now = (step % std::max(1, cfg.log_every) == 0) || step + 1 == cfg.max_steps;
    if (log_now) {
      result.log.push_back({step, loss, lr, ms});
      if (log.is_open())
        log << "step=" << step << " loss=" << loss << " lr=" << lr << " ms_per_step=" << ms << "\n";
    }
    bool ckpt_now =
        (cfg.checkpoint_every > 0 && step > 0 && step % cfg.checkpoint_every == 0) ||
        step + 1 == cfg.max_steps;
    if (ckpt_now && checkpoint_fn) {
      std::string note = checkpoint_fn(model, step);
      if (!note.empty() && log.is_open()) log << "step=" << step << " " << note << "\n";
    }
  }
  return result;
}

}  // namespace ea
