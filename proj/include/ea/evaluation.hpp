#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ea/corpus.hpp"
#include "ea/kv.hpp"

namespace ea {

// Corpus BLEU-4: geometric mean of n-gram precisions with add-one smoothing
// on numerator and denominator for n >= 2 (p1 unsmoothed), times the brevity
// penalty exp(min(0, 1 - ref_len/hyp_len)), scaled to [0, 100].
double bleu(const std::vector<TokenList>& references, const std::vector<TokenList>& hypotheses);

bool contains_contiguous(const TokenList& haystack, const TokenList& needle);

struct ErrorRates {
  double total = 0.0;
  std::map<EntityType, double> by_type;
  std::map<EntityType, int> n_entities;
  int n_total = 0;
  int errors_total = 0;
};

// An entity counts as an error iff its gold target surface does not occur as
// a contiguous token subsequence of the hypothesis.
ErrorRates entity_error_rate(const std::vector<AnnotatedSentence>& test,
                             const std::vector<TokenList>& hypotheses);

// Fraction of flagged (known-incorrect) candidates whose surface occurs
// contiguously in the paired output. Throws when no case is flagged.
struct MisguidanceCase {
  TokenList candidate;
  TokenList output;
};
double misguidance_rate(const std::vector<MisguidanceCase>& cases);

struct LatencyStats {
  double mean_ms = 0.0;
  double variance = 0.0;
  int n = 0;
};

// Wall-clock per item, single-threaded, batch size one. The model must be
// loaded and warmed by the caller.
LatencyStats measure_latency(const std::function<void(size_t)>& run_one, size_t n);

double exact_match_accuracy(const std::vector<std::pair<TokenList, TokenList>>& produced_expected);

struct EvalReport {
  std::string method;
  std::string fingerprint;
  double bleu_score = 0.0;
  ErrorRates errors;
  double misguidance = -1.0;  // negative: not measured
  int flagged_cases = 0;
  LatencyStats latency;

  KvMap to_kv() const;
};

void save_report(const std::string& path, const EvalReport& report);

// Aligned plain-text comparison table, one row per report.
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace ea
