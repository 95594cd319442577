#include "ea/model.hpp"

#include <cmath>

namespace ea {

std::map<std::string, std::string> ModelConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["layers"] = std::to_string(layers);
  kv["hidden_dim"] = std::to_string(hidden_dim);
  kv["heads"] = std::to_string(heads);
  kv["ffn_dim"] = std::to_string(ffn_dim);
  kv["dropout"] = std::to_string(dropout);
  kv["max_src_len"] = std::to_string(max_src_len);
  kv["max_prefix_len"] = std::to_string(max_prefix_len);
  kv["max_tgt_len"] = std::to_string(max_tgt_len);
  kv["vocab_size"] = std::to_string(vocab_size);
  kv["use_type_embeddings"] = use_type_embeddings ? "1" : "0";
  kv["use_prefix"] = use_prefix ? "1" : "0";
  kv["attend_site"] = attend_site == AttendSite::DECODER ? "decoder" : "encoder";
  kv["max_candidates"] = std::to_string(max_candidates);
  kv["prefix_bidirectional"] = prefix_bidirectional ? "1" : "0";
  return kv;
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto get = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    require(it != kv.end(), "model config: missing key " + k);
    return it->second;
  };
  c.layers = std::stoi(get("layers"));
  c.hidden_dim = std::stoi(get("hidden_dim"));
  c.heads = std::stoi(get("heads"));
  c.ffn_dim = std::stoi(get("ffn_dim"));
  c.dropout = std::stod(get("dropout"));
  c.max_src_len = std::stoi(get("max_src_len"));
  c.max_prefix_len = std::stoi(get("max_prefix_len"));
  c.max_tgt_len = std::stoi(get("max_tgt_len"));
  c.vocab_size = std::stoi(get("vocab_size"));
  c.use_type_embeddings = get("use_type_embeddings") == "1";
  c.use_prefix = get("use_prefix") == "1";
  c.attend_site = get("attend_site") == "encoder" ? AttendSite::ENCODER : AttendSite::DECODER;
  c.max_candidates = std::stoi(get("max_candidates"));
  c.prefix_bidirectional = get("prefix_bidirectional") == "1";
  return c;
}

Matrix& ParamStore::at(const std::string& name) {
  auto it = tensors.find(name);
  require(it != tensors.end(), "params: unknown tensor " + name);
  return it->second;
}

const Matrix& ParamStore::at(const std::string& name) const {
  auto it = tensors.find(name);
  require(it != tensors.end(), "params: unknown tensor " + name);
  return it->second;
}

Matrix& ParamStore::add(const std::string& name, size_t rows, size_t cols) {
  require(!tensors.count(name), "params: duplicate tensor " + name);
  return tensors.emplace(name, Matrix(rows, cols)).first->second;
}

void ParamStore::zero() {
  for (auto& [k, m] : tensors) m.zero();
}

size_t ParamStore::n_params() const {
  size_t n = 0;
  for (const auto& [k, m] : tensors) n += m.size();
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& [k, m] : tensors) out.add(k, m.rows(), m.cols());
  return out;
}

double ParamStore::global_norm() const {
  double ss = 0.0;
  for (const auto& [k, m] : tensors) {
    const double* p = m.data();
    for (size_t i = 0; i < m.size(); ++i) ss += p[i] * p[i];
  }
  return std::sqrt(ss);
}

void ParamStore::scale(double s) {
  for (auto& [k, m] : tensors) scale_inplace(m, s);
}

void ParamStore::add_scaled(const ParamStore& other, double s) {
  for (auto& [k, m] : tensors) {
    const Matrix& o = other.at(k);
    double* __restrict pm = m.data();
    const double* __restrict po = o.data();
    for (size_t i = 0; i < m.size(); ++i) pm[i] += s * po[i];
  }
}

int type_tag_of(EntityType t) {
  switch (t) {
    case EntityType::PER: return 1;
    case EntityType::LOC: return 2;
    case EntityType::ORG: return 3;
  }
  return 0;
}

std::vector<int> make_type_tags(size_t len, const std::vector<EntitySpan>& entities) {
  std::vector<int> tags(len, 0);
  for (const auto& e : entities)
    for (int i = e.start; i < e.end && i < static_cast<int>(len); ++i)
      if (i >= 0) tags[i] = type_tag_of(e.type);
  return tags;
}

DecoderInput make_decoder_input(const std::vector<int>& prefix_ids,
                                const std::vector<int>& target_ids) {
  DecoderInput d;
  d.prefix_len = static_cast<int>(prefix_ids.size());
  const int p = d.prefix_len;
  const int m = static_cast<int>(target_ids.size());
  d.ids.reserve(p + 1 + m);
  d.ids = prefix_ids;
  d.ids.push_back(Vocab::kBos);
  d.ids.insert(d.ids.end(), target_ids.begin(), target_ids.end());

  d.position_ids.resize(d.ids.size());
  d.segment.resize(d.ids.size());
  d.loss_mask.resize(d.ids.size());
  d.labels.assign(d.ids.size(), Vocab::kPad);
  for (int i = 0; i < p; ++i) {
    d.position_ids[i] = i;
    d.segment[i] = 0;
    d.loss_mask[i] = 0;
  }
  for (int j = 0; j <= m; ++j) {
    d.position_ids[p + j] = j;
    d.segment[p + j] = 1;
    d.loss_mask[p + j] = 1;
    d.labels[p + j] = j < m ? target_ids[j] : Vocab::kEos;
  }
  return d;
}

PrefixResult build_decoder_prefix(const CandidateSet& candidates, const Vocab& vocab,
                                  int max_candidates, bool use_inner_sep, int max_prefix_len) {
  require(max_candidates >= 1, "prefix: max_candidates must be >= 1");
  PrefixResult out;
  const int inner_sep = use_inner_sep ? Vocab::kSep2 : Vocab::kSep;
  bool overflow = false;
  for (const auto& entry : candidates) {
    require(!entry.candidates.empty(), "prefix: empty candidate list");
    if (overflow) {
      out.truncated_entities++;
      continue;
    }
    std::vector<int> block;
    int keep = std::min<int>(max_candidates, static_cast<int>(entry.candidates.size()));
    for (int k = 0; k < keep; ++k) {
      if (k > 0) block.push_back(inner_sep);
      for (const auto& tok : entry.candidates[k]) block.push_back(vocab.id(tok));
    }
    size_t extra = block.size() + (out.ids.empty() ? 0 : 1);
    if (out.ids.size() + extra > static_cast<size_t>(max_prefix_len)) {
      overflow = true;
      out.truncated_entities++;
      continue;
    }
    if (!out.ids.empty()) out.ids.push_back(Vocab::kSep);
    out.ids.insert(out.ids.end(), block.begin(), block.end());
  }
  return out;
}

EncoderInput plain_encoder_input(const std::vector<int>& src_ids, const std::vector<int>& type_tags) {
  require(src_ids.size() == type_tags.size(), "encoder input: length mismatch");
  EncoderInput in;
  in.ids = src_ids;
  in.type_tags = type_tags;
  in.src_len = static_cast<int>(src_ids.size());
  in.pos_ids.resize(src_ids.size());
  in.rel_ids.assign(src_ids.size(), -1);
  for (size_t i = 0; i < src_ids.size(); ++i) in.pos_ids[i] = static_cast<int>(i);
  return in;
}

EncoderInput build_encoder_input_with_candidates(const std::vector<int>& src_ids,
                                                 const std::vector<int>& type_tags,
                                                 const CandidateSet& candidates, const Vocab& vocab,
                                                 int max_candidates, bool use_inner_sep) {
  EncoderInput in = plain_encoder_input(src_ids, type_tags);
  const int inner_sep = use_inner_sep ? Vocab::kSep2 : Vocab::kSep;
  int prev_anchor = 0, prev_rel = 0;
  bool first_block = true;
  for (const auto& entry : candidates) {
    require(!entry.candidates.empty(), "encoder input: empty candidate list");
    const int anchor = entry.span.start;
    const int type_tag = type_tag_of(entry.span.type);
    if (!first_block) {
      // the separator rides on the previous block's tail so each entity's
      // own tokens start at R[0]
      in.ids.push_back(Vocab::kSep);
      in.type_tags.push_back(0);
      in.pos_ids.push_back(prev_anchor);
      in.rel_ids.push_back(prev_rel);
    }
    int rel = 0;
    auto push = [&](int id) {
      in.ids.push_back(id);
      in.type_tags.push_back(type_tag);
      in.pos_ids.push_back(anchor);
      in.rel_ids.push_back(rel++);
    };
    int keep = std::min<int>(max_candidates, static_cast<int>(entry.candidates.size()));
    for (int k = 0; k < keep; ++k) {
      if (k > 0) push(inner_sep);
      for (const auto& tok : entry.candidates[k]) push(vocab.id(tok));
    }
    prev_anchor = anchor;
    prev_rel = rel;
    first_block = false;
  }
  return in;
}

void init_params(ParamStore& store, const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  const int d = cfg.hidden_dim, f = cfg.ffn_dim, v = cfg.vocab_size;

  store.add("tok_emb", v, d);
  store.add("type_emb", 4, d);
  store.add("pos_src", cfg.max_src_len, d);
  store.add("pos_ce", cfg.max_prefix_len, d);
  store.add("pos_e", cfg.max_tgt_len, d);
  store.add("rel_cand", cfg.max_prefix_len, d);

  auto add_ln = [&](const std::string& base) {
    store.add(base + ".g", 1, d);
    store.add(base + ".b", 1, d);
  };
  auto add_attn = [&](const std::string& base) {
    store.add(base + ".wq", d, d);
    store.add(base + ".wk", d, d);
    store.add(base + ".wv", d, d);
    store.add(base + ".wo", d, d);
  };
  auto add_ffn = [&](const std::string& base) {
    store.add(base + ".w1", d, f);
    store.add(base + ".b1", 1, f);
    store.add(base + ".w2", f, d);
    store.add(base + ".b2", 1, d);
  };

  for (int l = 0; l < cfg.layers; ++l) {
    std::string e = "enc" + std::to_string(l);
    add_ln(e + ".ln1");
    add_attn(e + ".attn");
    add_ln(e + ".ln2");
    add_ffn(e + ".ff");
    std::string dd = "dec" + std::to_string(l);
    add_ln(dd + ".ln1");
    add_attn(dd + ".self");
    add_ln(dd + ".ln2");
    add_attn(dd + ".cross");
    add_ln(dd + ".ln3");
    add_ffn(dd + ".ff");
  }
  add_ln("enc_ln");
  add_ln("dec_ln");

  // Init in sorted-name order: one RNG stream, bit-reproducible.
  Rng rng(seed, 0xA11);
  for (auto& [name, m] : store.tensors) {
    bool is_gain = name.size() > 2 && name.substr(name.size() - 2) == ".g";
    bool is_bias = (name.size() > 2 && name.substr(name.size() - 2) == ".b") ||
                   name.find(".b1") != std::string::npos || name.find(".b2") != std::string::npos;
    if (is_gain) {
      for (size_t i = 0; i < m.size(); ++i) m.data()[i] = 1.0;
    } else if (is_bias) {
      m.zero();
    } else {
      for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, 0.02);
    }
  }
}

Transformer::Transformer(ModelConfig cfg, uint64_t init_seed) : cfg_(cfg) {
  init_params(params_, cfg_, init_seed);
}

}  // namespace ea
