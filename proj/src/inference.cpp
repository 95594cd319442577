#include "ea/inference.hpp"

#include <algorithm>
#include <cmath>

namespace ea {

std::map<std::string, std::string> DecodeConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["strategy"] = strategy == Strategy::GREEDY ? "greedy" : "beam";
  kv["beam_size"] = std::to_string(beam_size);
  kv["length_penalty"] = std::to_string(length_penalty);
  kv["cap_mult"] = std::to_string(cap_mult);
  kv["cap_add"] = std::to_string(cap_add);
  return kv;
}

DecodeConfig DecodeConfig::from_kv(const std::map<std::string, std::string>& kv) {
  DecodeConfig c;
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    require(it != kv.end(), "decode config: missing key " + k);
    return it->second;
  };
  c.strategy = get("strategy") == "beam" ? Strategy::BEAM : Strategy::GREEDY;
  c.beam_size = std::stoi(get("beam_size"));
  c.length_penalty = std::stod(get("length_penalty"));
  c.cap_mult = std::stoi(get("cap_mult"));
  c.cap_add = std::stoi(get("cap_add"));
  return c;
}

namespace {

bool keep_in_output(const Vocab& vocab, int id) {
  (void)vocab;
  return id != Vocab::kPad && id != Vocab::kBos && id != Vocab::kEos && id != Vocab::kSep &&
         id != Vocab::kSep2;
}

TokenList clean_output(const Vocab& vocab, const std::vector<int>& ids) {
  TokenList out;
  for (int id : ids)
    if (keep_in_output(vocab, id)) out.push_back(vocab.token(id));
  return out;
}

std::vector<double> log_softmax_row(const Matrix& logits, size_t row) {
  const size_t v = logits.cols();
  const double* z = logits.row(row);
  double mx = z[0];
  for (size_t j = 1; j < v; ++j) mx = std::max(mx, z[j]);
  double sum = 0.0;
  for (size_t j = 0; j < v; ++j) sum += std::exp(z[j] - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out(v);
  for (size_t j = 0; j < v; ++j) out[j] = z[j] - lse;
  return out;
}

double length_penalty_of(double alpha, int len) {
  if (alpha == 0.0) return 1.0;
  return std::pow((5.0 + static_cast<double>(len)) / 6.0, alpha);
}

TranslationResult greedy_decode(const Transformer& model, const Vocab& vocab,
                                const Matrix& enc_states, const std::vector<int>& prefix_ids,
                                int cap, const DecodeConfig& cfg, bool record) {
  (void)cfg;
  TranslationResult res;
  std::vector<int> generated;
  DecoderCache dec;
  for (int step = 0; step < cap; ++step) {
    DecoderInput in = make_decoder_input(prefix_ids, generated);
    model.decode(in, enc_states, dec);
    size_t last = in.ids.size() - 1;
    const double* z = dec.logits.row(last);
    int best = 0;
    for (int j = 1; j < static_cast<int>(dec.logits.cols()); ++j)
      if (z[j] > z[best]) best = j;
    if (record) {
      Matrix row(1, dec.logits.cols());
      for (size_t j = 0; j < dec.logits.cols(); ++j) row(0, j) = z[j];
      res.step_logits.push_back(std::move(row));
    }
    if (best == Vocab::kEos) break;
    generated.push_back(best);
  }
  // final pass over the complete sequence for the attention map
  DecoderInput in = make_decoder_input(prefix_ids, generated);
  model.decode(in, enc_states, dec);
  res.cross_attention = Transformer::mean_cross_attention(dec);
  res.raw_ids = std::move(generated);
  res.tokens = clean_output(vocab, res.raw_ids);
  return res;
}

struct Hypothesis {
  std::vector<int> ids;
  double logprob = 0.0;
  bool finished = false;
};

TranslationResult beam_decode(const Transformer& model, const Vocab& vocab,
                              const Matrix& enc_states, const std::vector<int>& prefix_ids,
                              int cap, const DecodeConfig& cfg) {
  std::vector<Hypothesis> beam{{{}, 0.0, false}};
  DecoderCache dec;
  for (int step = 0; step < cap; ++step) {
    std::vector<Hypothesis> pool;
    bool any_live = false;
    for (const auto& hyp : beam) {
      if (hyp.finished) {
        pool.push_back(hyp);
        continue;
      }
      any_live = true;
      DecoderInput in = make_decoder_input(prefix_ids, hyp.ids);
      model.decode(in, enc_states, dec);
      auto logp = log_softmax_row(dec.logits, in.ids.size() - 1);
      // top beam_size expansions of this hypothesis
      std::vector<int> idx(logp.size());
      for (size_t j = 0; j < idx.size(); ++j) idx[j] = static_cast<int>(j);
      int k = std::min<int>(cfg.beam_size, static_cast<int>(idx.size()));
      std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        if (logp[a] != logp[b]) return logp[a] > logp[b];
        return a < b;  // deterministic ties
      });
      for (int t = 0; t < k; ++t) {
        Hypothesis next = hyp;
        next.logprob += logp[idx[t]];
        if (idx[t] == Vocab::kEos) {
          next.finished = true;
        } else {
          next.ids.push_back(idx[t]);
        }
        pool.push_back(std::move(next));
      }
    }
    if (!any_live) break;
    // prune by normalized score
    std::stable_sort(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) {
      double sa = a.logprob / length_penalty_of(cfg.length_penalty, static_cast<int>(a.ids.size()));
      double sb = b.logprob / length_penalty_of(cfg.length_penalty, static_cast<int>(b.ids.size()));
      return sa > sb;
    });
    if (static_cast<int>(pool.size()) > cfg.beam_size) pool.resize(cfg.beam_size);
    beam = std::move(pool);
  }
  const Hypothesis* best = &beam.front();
  double best_score = -1e300;
  for (const auto& h : beam) {
    double s = h.logprob / length_penalty_of(cfg.length_penalty, static_cast<int>(h.ids.size()));
    if (s > best_score) {
      best_score = s;
      best = &h;
    }
  }
  TranslationResult res;
  res.raw_ids = best->ids;
  DecoderInput in = make_decoder_input(prefix_ids, res.raw_ids);
  model.decode(in, enc_states, dec);
  res.cross_attention = Transformer::mean_cross_attention(dec);
  res.tokens = clean_output(vocab, res.raw_ids);
  return res;
}

}  // namespace

TranslationResult translate(const Transformer& model, const Vocab& vocab,
                            const EncoderInput& enc_input, const std::vector<int>& prefix_ids,
                            const DecodeConfig& cfg, bool record_step_logits) {
  cfg.validate();
  EncoderCache enc;
  model.encode(enc_input, enc);
  int cap = cfg.cap_mult * enc_input.src_len + cfg.cap_add;
  cap = std::min(cap, model.config().max_tgt_len - 2);
  if (cfg.strategy == DecodeConfig::Strategy::GREEDY)
    return greedy_decode(model, vocab, enc.states, prefix_ids, cap, cfg, record_step_logits);
  return beam_decode(model, vocab, enc.states, prefix_ids, cap, cfg);
}

TokenList replacement_postprocess(const TokenList& output_tokens, const Matrix& cross_attention,
                                  int prefix_len, int src_len, const CandidateSet& candidates,
                                  int* skipped_entities) {
  const int m = static_cast<int>(output_tokens.size());
  if (skipped_entities) *skipped_entities = 0;
  if (candidates.empty() || m == 0) return output_tokens;
  require(static_cast<int>(cross_attention.rows()) >= prefix_len + m,
          "replacement: attention map shorter than the output");

  // argmax source position for each output token (row prefix_len + j emitted
  // token j)
  std::vector<int> align(m);
  for (int j = 0; j < m; ++j) {
    const double* row = cross_attention.row(prefix_len + j);
    int best = 0;
    for (int s = 1; s < src_len; ++s)
      if (row[s] > row[best]) best = s;
    align[j] = best;
  }

  std::vector<uint8_t> consumed(m, 0);
  struct Patch {
    int lo, hi;  // [lo, hi) in output positions
    const TokenList* cand;
  };
  std::vector<Patch> patches;
  for (const auto& entry : candidates) {
    int lo = m, hi = -1;
    for (int j = 0; j < m; ++j) {
      if (consumed[j]) continue;
      if (align[j] >= entry.span.start && align[j] < entry.span.end) {
        lo = std::min(lo, j);
        hi = std::max(hi, j);
      }
    }
    if (hi < 0) {
      if (skipped_entities) (*skipped_entities)++;
      continue;
    }
    for (int j = lo; j <= hi; ++j) consumed[j] = 1;
    patches.push_back({lo, hi + 1, &entry.candidates[entry.chosen_index]});
  }
  std::sort(patches.begin(), patches.end(), [](const Patch& a, const Patch& b) { return a.lo < b.lo; });

  TokenList out;
  int j = 0;
  size_t p = 0;
  while (j < m) {
    if (p < patches.size() && patches[p].lo == j) {
      out.insert(out.end(), patches[p].cand->begin(), patches[p].cand->end());
      j = patches[p].hi;
      p++;
    } else {
      out.push_back(output_tokens[j]);
      j++;
    }
  }
  return out;
}

AnnotatedSentence placeholder_transform(const AnnotatedSentence& sent, const Vocab& vocab) {
  AnnotatedSentence out;
  std::map<EntityType, int> counter;
  // assign indices in source order; entities beyond the placeholder budget
  // keep their surface
  std::vector<int> plh_index(sent.entities.size(), -1);
  for (size_t e = 0; e < sent.entities.size(); ++e) {
    int k = ++counter[sent.entities[e].type];
    if (k <= Vocab::kMaxPlaceholders) plh_index[e] = k;
  }

  size_t e = 0;
  for (int i = 0; i < static_cast<int>(sent.src_tokens.size());) {
    if (e < sent.entities.size() && i == sent.entities[e].start) {
      if (plh_index[e] >= 0)
        out.src_tokens.push_back(vocab.token(vocab.placeholder(sent.entities[e].type, plh_index[e])));
      else
        for (int k = sent.entities[e].start; k < sent.entities[e].end; ++k)
          out.src_tokens.push_back(sent.src_tokens[k]);
      i = sent.entities[e].end;
      e++;
    } else {
      out.src_tokens.push_back(sent.src_tokens[i]);
      i++;
    }
  }
  // reference side: entities ordered by tgt_start share source order here
  e = 0;
  for (int i = 0; i < static_cast<int>(sent.tgt_tokens.size());) {
    if (e < sent.entities.size() && i == sent.entities[e].tgt_start) {
      if (plh_index[e] >= 0)
        out.tgt_tokens.push_back(vocab.token(vocab.placeholder(sent.entities[e].type, plh_index[e])));
      else
        for (int k = sent.entities[e].tgt_start; k < sent.entities[e].tgt_end; ++k)
          out.tgt_tokens.push_back(sent.tgt_tokens[k]);
      i = sent.entities[e].tgt_end;
      e++;
    } else {
      out.tgt_tokens.push_back(sent.tgt_tokens[i]);
      i++;
    }
  }
  return out;
}

TokenList placeholder_pipeline(const Transformer& model, const Vocab& vocab,
                               const AnnotatedSentence& sent, const CandidateSet& candidates,
                               const DecodeConfig& cfg, PlaceholderStats* stats) {
  // build the placeholder source over candidate-backed spans only
  std::map<EntityType, int> counter;
  std::map<int, const CandidateEntry*> by_plh_id;  // placeholder vocab id -> entry
  TokenList src;
  size_t c = 0;
  for (int i = 0; i < static_cast<int>(sent.src_tokens.size());) {
    if (c < candidates.size() && i == candidates[c].span.start) {
      int k = ++counter[candidates[c].span.type];
      if (k <= Vocab::kMaxPlaceholders) {
        int pid = vocab.placeholder(candidates[c].span.type, k);
        by_plh_id[pid] = &candidates[c];
        src.push_back(vocab.token(pid));
      } else {
        if (stats) stats->overflow_entities++;
        for (int t = candidates[c].span.start; t < candidates[c].span.end; ++t)
          src.push_back(sent.src_tokens[t]);
      }
      i = candidates[c].span.end;
      c++;
    } else {
      src.push_back(sent.src_tokens[i]);
      i++;
    }
  }

  EncoderInput enc_in = plain_encoder_input(vocab.encode(src), std::vector<int>(src.size(), 0));
  TranslationResult res = translate(model, vocab, enc_in, {}, cfg);

  std::vector<std::pair<std::string, TokenList>> mapping;
  for (const auto& [pid, entry] : by_plh_id)
    mapping.emplace_back(vocab.token(pid), entry->candidates[entry->chosen_index]);
  return restore_placeholders(res.tokens, mapping, stats);
}

TokenList restore_placeholders(const TokenList& decoded,
                               const std::vector<std::pair<std::string, TokenList>>& plh_to_candidate,
                               PlaceholderStats* stats) {
  std::map<std::string, const TokenList*> mapping;
  for (const auto& [plh, cand] : plh_to_candidate) mapping[plh] = &cand;
  std::map<std::string, int> emitted;
  TokenList out;
  for (const auto& tok : decoded) {
    auto it = mapping.find(tok);
    if (it != mapping.end()) {
      out.insert(out.end(), it->second->begin(), it->second->end());
      emitted[tok]++;
    } else {
      out.push_back(tok);
    }
  }
  if (stats) {
    for (const auto& [plh, cand] : mapping) {
      auto it = emitted.find(plh);
      if (it == emitted.end())
        stats->missing_placeholders++;
      else if (it->second > 1)
        stats->duplicate_placeholders++;
    }
  }
  return out;
}

std::vector<AnnotatedSentence> transformer_with_dictionary_corpus(
    const std::vector<AnnotatedSentence>& corpus, const Dictionary& dict) {
  std::vector<AnnotatedSentence> out = corpus;
  for (const auto& [src, cands] : dict.all()) {
    for (const auto& entry : cands) {
      AnnotatedSentence s;
      s.src_tokens = split_ws(src);
      s.tgt_tokens = entry.tgt_surface;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace ea
