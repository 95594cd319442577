#include "ea/runconfig.hpp"

#include <algorithm>
#include <sstream>

namespace ea {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::string& get(const KvMap& kv, const std::string& k) {
  auto it = kv.find(k);
  require(it != kv.end(), "config: missing key " + k);
  return it->second;
}

KvMap with_prefix(const KvMap& kv, const std::string& prefix) {
  KvMap out;
  for (const auto& [k, v] : kv)
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  return out;
}

void merge_prefixed(KvMap& into, const KvMap& kv, const std::string& prefix) {
  for (const auto& [k, v] : kv) into[prefix + k] = v;
}

}  // namespace

KvMap world_to_kv(const WorldConfig& cfg) {
  KvMap kv;
  kv["seed"] = std::to_string(cfg.seed);
  kv["content_vocab_size"] = std::to_string(cfg.content_vocab_size);
  kv["sent_len_min"] = std::to_string(cfg.sent_len_min);
  kv["sent_len_max"] = std::to_string(cfg.sent_len_max);
  kv["ents_min"] = std::to_string(cfg.ents_min);
  kv["ents_max"] = std::to_string(cfg.ents_max);
  kv["nationalities"] = join(cfg.nationalities, ",");
  for (const auto& [t, c] : cfg.dict_coverage)
    kv[std::string("coverage_") + to_string(t)] = fmt_double(c);
  kv["multi_candidate_fraction"] = fmt_double(cfg.multi_candidate_fraction);
  kv["context_token_prob"] = fmt_double(cfg.context_token_prob);
  kv["train_size"] = std::to_string(cfg.train_size);
  kv["val_size"] = std::to_string(cfg.val_size);
  kv["test_size"] = std::to_string(cfg.test_size);
  kv["train_pool_per_type"] = std::to_string(cfg.train_pool_per_type);
  kv["unseen_pool_per_type"] = std::to_string(cfg.unseen_pool_per_type);
  kv["unseen_fraction"] = fmt_double(cfg.unseen_fraction);
  return kv;
}

WorldConfig world_from_kv(const KvMap& kv) {
  WorldConfig cfg;
  cfg.seed = std::stoull(get(kv, "seed"));
  cfg.content_vocab_size = std::stoi(get(kv, "content_vocab_size"));
  cfg.sent_len_min = std::stoi(get(kv, "sent_len_min"));
  cfg.sent_len_max = std::stoi(get(kv, "sent_len_max"));
  cfg.ents_min = std::stoi(get(kv, "ents_min"));
  cfg.ents_max = std::stoi(get(kv, "ents_max"));
  cfg.nationalities.clear();
  for (const auto& n : split_on(get(kv, "nationalities"), ','))
    if (!n.empty()) cfg.nationalities.push_back(n);
  cfg.dict_coverage.clear();
  for (EntityType t : kEntityTypes) {
    auto it = kv.find(std::string("coverage_") + to_string(t));
    if (it != kv.end()) cfg.dict_coverage[t] = std::stod(it->second);
  }
  cfg.multi_candidate_fraction = std::stod(get(kv, "multi_candidate_fraction"));
  cfg.context_token_prob = std::stod(get(kv, "context_token_prob"));
  cfg.train_size = std::stoi(get(kv, "train_size"));
  cfg.val_size = std::stoi(get(kv, "val_size"));
  cfg.test_size = std::stoi(get(kv, "test_size"));
  cfg.train_pool_per_type = std::stoi(get(kv, "train_pool_per_type"));
  cfg.unseen_pool_per_type = std::stoi(get(kv, "unseen_pool_per_type"));
  cfg.unseen_fraction = std::stod(get(kv, "unseen_fraction"));
  return cfg;
}

KvMap ner_to_kv(const NerMode& mode) {
  KvMap kv;
  kv["mode"] = mode.kind == NerMode::Kind::GOLD ? "gold" : "gazetteer";
  kv["p_miss"] = fmt_double(mode.p_miss);
  kv["p_spurious"] = fmt_double(mode.p_spurious);
  kv["p_boundary"] = fmt_double(mode.p_boundary);
  return kv;
}

NerMode ner_from_kv(const KvMap& kv) {
  NerMode mode;
  mode.kind = get(kv, "mode") == "gazetteer" ? NerMode::Kind::GAZETTEER : NerMode::Kind::GOLD;
  mode.p_miss = std::stod(get(kv, "p_miss"));
  mode.p_spurious = std::stod(get(kv, "p_spurious"));
  mode.p_boundary = std::stod(get(kv, "p_boundary"));
  return mode;
}

void RunConfig::validate() const {
  world.validate();
  train.validate();
  decode.validate();
  ner.validate();
  require(std::find(kMethods.begin(), kMethods.end(), method) != kMethods.end(),
          "config: unknown method " + method);
  require(!run_dir.empty(), "config: empty run_dir");
  require(model.max_candidates >= 1, "config: bad max_candidates");
}

KvMap RunConfig::to_kv() const {
  KvMap kv;
  merge_prefixed(kv, world_to_kv(world), "world.");
  merge_prefixed(kv, model.to_kv(), "model.");
  merge_prefixed(kv, train.to_kv(), "train.");
  merge_prefixed(kv, decode.to_kv(), "decode.");
  merge_prefixed(kv, translit.model.to_kv(), "translit.model.");
  merge_prefixed(kv, translit.train.to_kv(), "translit.train.");
  kv["translit.use_nationality_tag"] = translit.use_nationality_tag ? "1" : "0";
  kv["classifier.feature_dim"] = std::to_string(classifier.feature_dim);
  kv["classifier.min_label_count"] = std::to_string(classifier.min_label_count);
  kv["classifier.learning_rate"] = fmt_double(classifier.learning_rate);
  kv["classifier.max_epochs"] = std::to_string(classifier.max_epochs);
  kv["classifier.loss_tolerance"] = fmt_double(classifier.loss_tolerance);
  merge_prefixed(kv, ner_to_kv(ner), "ner.");
  kv["method"] = method;
  kv["run_dir"] = run_dir;
  kv["use_translit"] = use_translit ? "1" : "0";
  return kv;
}

RunConfig RunConfig::from_kv(const KvMap& kv) {
  RunConfig cfg;
  cfg.world = world_from_kv(with_prefix(kv, "world."));
  cfg.model = ModelConfig::from_kv(with_prefix(kv, "model."));
  cfg.train = TrainConfig::from_kv(with_prefix(kv, "train."));
  cfg.decode = DecodeConfig::from_kv(with_prefix(kv, "decode."));
  cfg.translit.model = ModelConfig::from_kv(with_prefix(kv, "translit.model."));
  cfg.translit.train = TrainConfig::from_kv(with_prefix(kv, "translit.train."));
  cfg.translit.use_nationality_tag = get(kv, "translit.use_nationality_tag") == "1";
  cfg.classifier.feature_dim = std::stoi(get(kv, "classifier.feature_dim"));
  cfg.classifier.min_label_count = std::stoi(get(kv, "classifier.min_label_count"));
  cfg.classifier.learning_rate = std::stod(get(kv, "classifier.learning_rate"));
  cfg.classifier.max_epochs = std::stoi(get(kv, "classifier.max_epochs"));
  cfg.classifier.loss_tolerance = std::stod(get(kv, "classifier.loss_tolerance"));
  cfg.ner = ner_from_kv(with_prefix(kv, "ner."));
  cfg.method = get(kv, "method");
  cfg.run_dir = get(kv, "run_dir");
  cfg.use_translit = get(kv, "use_translit") == "1";
  return cfg;
}

ModelConfig RunConfig::model_for_method(const std::string& m) const {
  ModelConfig mc = model;
  mc.attend_site = AttendSite::DECODER;
  if (m == "plain" || m == "dict" || m == "replace" || m == "placeholder") {
    mc.use_prefix = false;
    mc.use_type_embeddings = false;
  } else if (m == "annotate") {
    mc.use_prefix = false;
    mc.use_type_embeddings = true;
  } else if (m == "ea") {
    mc.use_prefix = true;
    mc.use_type_embeddings = true;
  } else if (m == "encoder-attend") {
    mc.use_prefix = false;
    mc.use_type_embeddings = true;
    mc.attend_site = AttendSite::ENCODER;
  } else {
    fail("config: unknown method " + m);
  }
  return mc;
}

}  // namespace ea
