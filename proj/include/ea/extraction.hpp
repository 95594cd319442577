#pragma once

#include <functional>
#include <vector>

#include "ea/corpus.hpp"
#include "ea/rng.hpp"
#include "ea/types.hpp"

namespace ea {

// Unit-cost edit distance over any indexable sequence.
template <typename Seq>
int levenshtein(const Seq& a, const Seq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct NerMode {
  enum class Kind { GOLD, GAZETTEER };
  Kind kind = Kind::GOLD;
  double p_miss = 0.0;      // drop a true entity
  double p_spurious = 0.0;  // emit a fake span over non-entity tokens
  double p_boundary = 0.0;  // perturb span boundaries by +-1

  void validate() const {
    for (double p : {p_miss, p_spurious, p_boundary})
      require(p >= 0.0 && p <= 1.0, "ner: probability out of [0,1]");
    if (kind == Kind::GOLD)
      require(p_miss == 0.0 && p_spurious == 0.0 && p_boundary == 0.0,
              "ner: GOLD mode implies zero noise");
  }
};

enum class SelectMode { TRAIN, INFER };
enum class CandidateSource { DICT, TRANSLIT };

struct CandidateEntry {
  EntitySpan span;                     // gold fields empty for non-gold detections
  std::vector<TokenList> candidates;   // rank order, non-empty
  int chosen_index = 0;
  CandidateSource source = CandidateSource::DICT;
  bool flagged_incorrect = false;      // candidate known wrong vs gold (robustness eval)
};

// Ordered as the entities appear in the source sentence.
using CandidateSet = std::vector<CandidateEntry>;

// GOLD returns the gold spans verbatim. GAZETTEER scans left-to-right taking
// the longest surface match, then applies miss/spurious/boundary noise.
std::vector<EntitySpan> detect_entities(const AnnotatedSentence& sent, const NerMode& mode,
                                        const Gazetteer& gazetteer, Rng& rng);

// TRAIN: nearest to the reference window by character-level edit distance over
// the joined surface. INFER: highest frequency. Ties break to the lowest index.
int select_candidate(const std::vector<TokenList>& candidates, SelectMode mode,
                     const TokenList* reference_window, const std::vector<int64_t>& frequencies);

// Full permutation of candidate indices in selection order.
std::vector<int> rank_candidates(const std::vector<TokenList>& candidates, SelectMode mode,
                                 const TokenList* reference_window,
                                 const std::vector<int64_t>& frequencies);

// Transliteration hook: (entity surface, source sentence) -> candidate tokens.
// An empty function disables the fallback.
using TranslitFn = std::function<TokenList(const TokenList&, const TokenList&)>;

CandidateSet extract_candidates(const AnnotatedSentence& sent, const Dictionary& dict,
                                const TranslitFn& translit, const NerMode& ner_mode,
                                SelectMode select_mode, const Gazetteer* gazetteer, Rng& rng,
                                int max_candidates = 1);

}  // namespace ea
