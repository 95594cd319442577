#pragma once

#include <string>
#include <vector>

#include "ea/extraction.hpp"
#include "ea/model.hpp"
#include "ea/vocab.hpp"

namespace ea {

struct DecodeConfig {
  enum class Strategy { GREEDY, BEAM };
  Strategy strategy = Strategy::GREEDY;
  int beam_size = 4;
  double length_penalty = 0.6;  // GNMT ((5+len)/6)^alpha
  int cap_mult = 2, cap_add = 8;  // generation cap = cap_mult*|src| + cap_add

  void validate() const { require(beam_size >= 1, "decode: beam_size must be >= 1"); }

  std::map<std::string, std::string> to_kv() const;
  static DecodeConfig from_kv(const std::map<std::string, std::string>& kv);
};

struct TranslationResult {
  TokenList tokens;              // specials filtered; placeholders kept
  std::vector<int> raw_ids;      // generated ids, EOS excluded
  Matrix cross_attention;        // mean last-layer cross-attention of the final pass
  std::vector<Matrix> step_logits;  // greedy only: last-row logits per step
};

// Forced-prefix decoding: the prefix and BOS are fed, never predicted;
// generation starts after BOS and stops at EOS or the length cap.
TranslationResult translate(const Transformer& model, const Vocab& vocab,
                            const EncoderInput& enc_input, const std::vector<int>& prefix_ids,
                            const DecodeConfig& cfg, bool record_step_logits = false);

// Replacement baseline: per entity, the aligned target span is the contiguous
// hull of output positions whose argmax cross-attention lands inside the
// entity; the span is hard-replaced by the candidate. Earlier entities
// consume positions first.
TokenList replacement_postprocess(const TokenList& output_tokens, const Matrix& cross_attention,
                                  int prefix_len, int src_len, const CandidateSet& candidates,
                                  int* skipped_entities = nullptr);

// Placeholder baseline.
struct PlaceholderStats {
  int missing_placeholders = 0;   // never emitted
  int duplicate_placeholders = 0;
  int overflow_entities = 0;  // more than 4 of a type
};

// Training-side transform: every entity span (source and reference) becomes a
// typed indexed placeholder, capped at 4 per type.
AnnotatedSentence placeholder_transform(const AnnotatedSentence& sent, const Vocab& vocab);

// Replaces each emitted placeholder token with its candidate; un-emitted
// placeholders count as missing, duplicates are all replaced.
TokenList restore_placeholders(const TokenList& decoded,
                               const std::vector<std::pair<std::string, TokenList>>& plh_to_candidate,
                               PlaceholderStats* stats = nullptr);

// Inference: candidate-backed source entities become placeholders, the plain
// model decodes, and emitted placeholders are restored with the candidates.
TokenList placeholder_pipeline(const Transformer& model, const Vocab& vocab,
                               const AnnotatedSentence& sent, const CandidateSet& candidates,
                               const DecodeConfig& cfg, PlaceholderStats* stats = nullptr);

// Transformer-with-dictionary baseline: each dictionary entry appended once
// as a bare sentence pair.
std::vector<AnnotatedSentence> transformer_with_dictionary_corpus(
    const std::vector<AnnotatedSentence>& corpus, const Dictionary& dict);

}  // namespace ea
