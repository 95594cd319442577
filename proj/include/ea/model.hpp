#pragma once

#include <map>
#include <string>
#include <vector>

#include "ea/extraction.hpp"
#include "ea/matrix.hpp"
#include "ea/rng.hpp"
#include "ea/vocab.hpp"

namespace ea {

enum class AttendSite { DECODER, ENCODER };

struct ModelConfig {
  int layers = 2;       // paper: 6
  int hidden_dim = 64;  // paper: 512
  int heads = 4;        // paper: 8
  int ffn_dim = 128;
  double dropout = 0.1;
  int max_src_len = 96;
  int max_prefix_len = 32;
  int max_tgt_len = 96;
  int vocab_size = 0;  // set when the vocabulary is known

  bool use_type_embeddings = false;
  bool use_prefix = false;
  AttendSite attend_site = AttendSite::DECODER;
  int max_candidates = 1;
  bool prefix_bidirectional = false;  // off: prefix tokens attend causally

  void validate() const {
    require(layers > 0 && hidden_dim > 0 && heads > 0 && ffn_dim > 0, "model: bad dims");
    require(hidden_dim % heads == 0, "model: hidden_dim must divide by heads");
    require(max_src_len > 0 && max_prefix_len > 0 && max_tgt_len > 0, "model: bad max lengths");
    require(vocab_size > 0, "model: vocab_size unset");
    require(dropout >= 0.0 && dropout < 1.0, "model: bad dropout");
    require(max_candidates >= 1, "model: bad max_candidates");
  }

  std::map<std::string, std::string> to_kv() const;
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);
};

// Flat collection of named tensors; map order gives every iteration
// (init, optimizer step, serialization) one deterministic order.
struct ParamStore {
  std::map<std::string, Matrix> tensors;

  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  Matrix& add(const std::string& name, size_t rows, size_t cols);

  void zero();
  size_t n_params() const;
  ParamStore zeros_like() const;

  double global_norm() const;
  void scale(double s);
  void add_scaled(const ParamStore& other, double s);
};

// Token type tags on the source: 0=O, 1=PER, 2=LOC, 3=ORG.
int type_tag_of(EntityType t);
std::vector<int> make_type_tags(size_t len, const std::vector<EntitySpan>& entities);

// ids = prefix ++ [BOS] ++ shifted target. Prefix positions index the CE
// table, target positions index the E table starting at BOS. labels align to
// ids one step ahead; loss_mask is 0 wherever the prediction is made at a
// prefix position.
struct DecoderInput {
  std::vector<int> ids;
  std::vector<int> position_ids;
  std::vector<uint8_t> segment;  // 0 prefix, 1 target
  std::vector<uint8_t> loss_mask;
  std::vector<int> labels;
  int prefix_len = 0;
};

DecoderInput make_decoder_input(const std::vector<int>& prefix_ids,
                                const std::vector<int>& target_ids);

struct PrefixResult {
  std::vector<int> ids;
  int truncated_entities = 0;
};

// cand1 ++ [SEP] ++ cand2 ++ ...; within an entity, variants join on SEP2
// (or SEP when use_inner_sep is off). Whole trailing entities are dropped
// when the prefix would exceed max_prefix_len.
PrefixResult build_decoder_prefix(const CandidateSet& candidates, const Vocab& vocab,
                                  int max_candidates, bool use_inner_sep, int max_prefix_len);

// Encoder-attend variant: candidates are appended to the source; each
// appended token reuses the absolute position of its entity's first token
// plus a learned within-candidate relative embedding.
struct EncoderInput {
  std::vector<int> ids;
  std::vector<int> type_tags;
  std::vector<int> pos_ids;
  std::vector<int> rel_ids;  // -1 on ordinary source positions
  int src_len = 0;
};

EncoderInput build_encoder_input_with_candidates(const std::vector<int>& src_ids,
                                                 const std::vector<int>& type_tags,
                                                 const CandidateSet& candidates, const Vocab& vocab,
                                                 int max_candidates, bool use_inner_sep);

EncoderInput plain_encoder_input(const std::vector<int>& src_ids, const std::vector<int>& type_tags);

// --- forward/backward ---

struct LayerNormCache {
  Matrix normed;  // x_hat
  std::vector<double> rstd;
};

struct AttentionCache {
  Matrix x_ln;  // LN output fed to projections
  LayerNormCache ln;
  Matrix q, k, v;
  std::vector<Matrix> probs;  // per head, rows are attention distributions
  Matrix concat;              // pre-output-projection
  Matrix drop_mask;           // empty when dropout off
};

struct FfnCache {
  Matrix x_ln;
  LayerNormCache ln;
  Matrix h_pre;  // before relu
  Matrix h;      // after relu
  Matrix drop_mask;
};

struct EncLayerCache {
  Matrix x_in;
  AttentionCache attn;
  Matrix x_mid;
  FfnCache ffn;
};

struct DecLayerCache {
  Matrix x_in;
  AttentionCache self_attn;
  Matrix x_mid1;
  AttentionCache cross_attn;
  Matrix x_mid2;
  FfnCache ffn;
};

struct EncoderCache {
  EncoderInput input;
  Matrix embedded;
  Matrix emb_drop_mask;
  std::vector<EncLayerCache> layers;
  LayerNormCache final_ln;
  Matrix states;  // final encoder output
};

struct DecoderCache {
  DecoderInput input;
  Matrix embedded;
  Matrix emb_drop_mask;
  std::vector<DecLayerCache> layers;
  LayerNormCache final_ln;
  Matrix hidden;  // final decoder output
  Matrix logits;
};

class Transformer {
 public:
  Transformer() = default;
  Transformer(ModelConfig cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // dropout_rng non-null enables the dropout stream (training mode).
  void encode(const EncoderInput& input, EncoderCache& cache, Rng* dropout_rng = nullptr) const;
  void decode(const DecoderInput& input, const Matrix& enc_states, DecoderCache& cache,
              Rng* dropout_rng = nullptr) const;

  // Mean cross-entropy over mask-1 positions; masked positions contribute
  // exactly zero to value and gradient. Returns loss and fills dlogits.
  static double loss(const Matrix& logits, const std::vector<int>& labels,
                     const std::vector<uint8_t>& loss_mask, Matrix* dlogits,
                     bool* all_masked = nullptr);

  void backward(const EncoderCache& enc, const DecoderCache& dec, const Matrix& dlogits,
                ParamStore& grads) const;

  // Cross-attention map of the last decoder layer, averaged over heads;
  // rows are decoder positions, columns source positions.
  static Matrix mean_cross_attention(const DecoderCache& cache);

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

void init_params(ParamStore& store, const ModelConfig& cfg, uint64_t seed);

}  // namespace ea
