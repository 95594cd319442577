#include "ea/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ea {

double bleu(const std::vector<TokenList>& references, const std::vector<TokenList>& hypotheses) {
  require(!hypotheses.empty(), "bleu: empty hypothesis set");
  require(references.size() == hypotheses.size(), "bleu: reference/hypothesis count mismatch");

  int64_t ref_len = 0, hyp_len = 0;
  int64_t match[5] = {0}, total[5] = {0};
  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const TokenList& ref = references[s];
    const TokenList& hyp = hypotheses[s];
    ref_len += static_cast<int64_t>(ref.size());
    hyp_len += static_cast<int64_t>(hyp.size());
    for (int n = 1; n <= 4; ++n) {
      std::map<std::string, int64_t> ref_counts;
      for (size_t i = 0; i + n <= ref.size(); ++i) {
        TokenList gram(ref.begin() + i, ref.begin() + i + n);
        ref_counts[join(gram, "\x1f")]++;
      }
      std::map<std::string, int64_t> hyp_counts;
      for (size_t i = 0; i + n <= hyp.size(); ++i) {
        TokenList gram(hyp.begin() + i, hyp.begin() + i + n);
        hyp_counts[join(gram, "\x1f")]++;
        total[n]++;
      }
      for (const auto& [gram, c] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) match[n] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    double p;
    if (n == 1) {
      if (match[1] == 0) return 0.0;
      p = static_cast<double>(match[1]) / static_cast<double>(total[1]);
    } else {
      p = (static_cast<double>(match[n]) + 1.0) / (static_cast<double>(total[n]) + 1.0);
    }
    log_sum += std::log(p);
  }
  double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

bool contains_contiguous(const TokenList& haystack, const TokenList& needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (haystack[i + j] != needle[j]) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

ErrorRates entity_error_rate(const std::vector<AnnotatedSentence>& test,
                             const std::vector<TokenList>& hypotheses) {
  require(test.size() == hypotheses.size(), "error rate: corpus/hypothesis count mismatch");
  ErrorRates r;
  std::map<EntityType, int> errors;
  for (EntityType t : kEntityTypes) {
    r.n_entities[t] = 0;
    errors[t] = 0;
  }
  for (size_t s = 0; s < test.size(); ++s) {
    for (const auto& e : test[s].entities) {
      r.n_entities[e.type]++;
      r.n_total++;
      if (!contains_contiguous(hypotheses[s], e.gold_tgt_surface)) {
        errors[e.type]++;
        r.errors_total++;
      }
    }
  }
  for (EntityType t : kEntityTypes)
    r.by_type[t] = r.n_entities[t] > 0
                       ? static_cast<double>(errors[t]) / static_cast<double>(r.n_entities[t])
                       : 0.0;
  r.total = r.n_total > 0 ? static_cast<double>(r.errors_total) / static_cast<double>(r.n_total) : 0.0;
  return r;
}

double misguidance_rate(const std::vector<MisguidanceCase>& cases) {
  require(!cases.empty(), "misguidance: zero flagged cases");
  int hit = 0;
  for (const auto& c : cases)
    if (contains_contiguous(c.output, c.candidate)) hit++;
  return static_cast<double>(hit) / static_cast<double>(cases.size());
}

LatencyStats measure_latency(const std::function<void(size_t)>& run_one, size_t n) {
  require(n > 0, "latency: empty subset");
  using clock = std::chrono::steady_clock;
  LatencyStats stats;
  stats.n = static_cast<int>(n);
  std::vector<double> ms(n);
  for (size_t i = 0; i < n; ++i) {
    auto t0 = clock::now();
    run_one(i);
    ms[i] = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  }
  double sum = 0.0;
  for (double v : ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : ms) ss += (v - stats.mean_ms) * (v - stats.mean_ms);
  stats.variance = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return stats;
}

double exact_match_accuracy(const std::vector<std::pair<TokenList, TokenList>>& produced_expected) {
  require(!produced_expected.empty(), "accuracy: empty set");
  int ok = 0;
  for (const auto& [produced, expected] : produced_expected)
    if (produced == expected) ok++;
  return static_cast<double>(ok) / static_cast<double>(produced_expected.size());
}

KvMap EvalReport::to_kv() const {
  KvMap kv;
  kv["method"] = method;
  kv["fingerprint"] = fingerprint;
  char buf[64];
  auto put = [&](const std::string& k, double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    kv[k] = buf;
  };
  put("bleu", bleu_score);
  put("error_rate_total", errors.total);
  for (EntityType t : kEntityTypes) {
    put(std::string("error_rate_") + to_string(t), errors.by_type.count(t) ? errors.by_type.at(t) : 0.0);
    kv[std::string("n_entities_") + to_string(t)] =
        std::to_string(errors.n_entities.count(t) ? errors.n_entities.at(t) : 0);
  }
  kv["n_entities_total"] = std::to_string(errors.n_total);
  if (misguidance >= 0.0) {
    put("misguidance_rate", misguidance);
    kv["flagged_cases"] = std::to_string(flagged_cases);
  }
  if (latency.n > 0) {
    put("mean_latency_ms", latency.mean_ms);
    put("latency_variance", latency.variance);
    kv["latency_n"] = std::to_string(latency.n);
  }
  return kv;
}

void save_report(const std::string& path, const EvalReport& report) {
  save_kv_file(path, report.to_kv());
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream os;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c,
                 const std::string& d, const std::string& e, const std::string& f,
                 const std::string& g) {
    os << a;
    for (size_t i = a.size(); i < 22; ++i) os << ' ';
    for (const std::string* s : {&b, &c, &d, &e, &f, &g}) {
      os << ' ';
      for (size_t i = s->size(); i < 9; ++i) os << ' ';
      os << *s;
    }
    os << "\n";
  };
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return std::string(buf);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  row("model", "BLEU", "ER-total", "ER-PER", "ER-ORG", "ER-LOC", "ms/sent");
  for (const auto& r : reports) {
    row(r.method, num(r.bleu_score), pct(r.errors.total),
        pct(r.errors.by_type.count(EntityType::PER) ? r.errors.by_type.at(EntityType::PER) : 0.0),
        pct(r.errors.by_type.count(EntityType::ORG) ? r.errors.by_type.at(EntityType::ORG) : 0.0),
        pct(r.errors.by_type.count(EntityType::LOC) ? r.errors.by_type.at(EntityType::LOC) : 0.0),
        r.latency.n > 0 ? num(r.latency.mean_ms) : "-");
  }
  return os.str();
}

}  // namespace ea
