#include "ea/extraction.hpp"

#include <algorithm>

namespace ea {

namespace {

std::vector<EntitySpan> gazetteer_matches(const AnnotatedSentence& sent, const Gazetteer& gaz) {
  std::vector<EntitySpan> out;
  const auto& toks = sent.src_tokens;
  const int n = static_cast<int>(toks.size());
  int i = 0;
  while (i < n) {
    int best = 0;
    for (int k = std::min(gaz.max_tokens(), n - i); k >= 1; --k) {
      std::string joined = join(TokenList(toks.begin() + i, toks.begin() + i + k));
      if (gaz.contains_joined(joined)) {
        best = k;
        break;
      }
    }
    if (best > 0) {
      EntitySpan span;
      span.start = i;
      span.end = i + best;
      span.src_surface.assign(toks.begin() + i, toks.begin() + i + best);
      span.type = gaz.type_of(join(span.src_surface)).value_or(EntityType::PER);
      out.push_back(std::move(span));
      i += best;
    } else {
      ++i;
    }
  }
  return out;
}

bool overlaps(int a0, int a1, int b0, int b1) { return a0 < b1 && b0 < a1; }

void apply_noise(std::vector<EntitySpan>& spans, const AnnotatedSentence& sent, const NerMode& mode,
                 Rng& rng) {
  const int n = static_cast<int>(sent.src_tokens.size());

  if (mode.p_miss > 0.0) {
    std::vector<EntitySpan> kept;
    for (auto& s : spans)
      if (!rng.bernoulli(mode.p_miss)) kept.push_back(std::move(s));
    spans = std::move(kept);
  }

  if (mode.p_spurious > 0.0 && rng.bernoulli(mode.p_spurious)) {
    int len = static_cast<int>(rng.uniform_int(1, 2));
    if (n >= len) {
      // a few placement attempts; give up if the sentence is all entities
      for (int attempt = 0; attempt < 8; ++attempt) {
        int start = static_cast<int>(rng.uniform_int(0, n - len));
        bool clash = false;
        for (const auto& s : spans)
          if (overlaps(start, start + len, s.start, s.end)) clash = true;
        if (clash) continue;
        EntitySpan fake;
        fake.start = start;
        fake.end = start + len;
        fake.src_surface.assign(sent.src_tokens.begin() + start, sent.src_tokens.begin() + start + len);
        fake.type = kEntityTypes[rng.index(kEntityTypes.size())];
        spans.push_back(std::move(fake));
        break;
      }
    }
  }

  if (mode.p_boundary > 0.0) {
    for (size_t k = 0; k < spans.size(); ++k) {
      if (!rng.bernoulli(mode.p_boundary)) continue;
      // cycle through the four +-1 moves from a random starting point and
      // take the first feasible one
      int first = static_cast<int>(rng.uniform_int(0, 3));
      for (int step = 0; step < 4; ++step) {
        int move = (first + step) % 4;
        EntitySpan cand = spans[k];
        int delta = (move & 1) ? 1 : -1;
        if (move < 2)
          cand.start += delta;
        else
          cand.end += delta;
        if (cand.start < 0 || cand.end > n || cand.start >= cand.end) continue;
        bool clash = false;
        for (size_t j = 0; j < spans.size(); ++j)
          if (j != k && overlaps(cand.start, cand.end, spans[j].start, spans[j].end)) clash = true;
        if (clash) continue;
        cand.src_surface.assign(sent.src_tokens.begin() + cand.start,
                                sent.src_tokens.begin() + cand.end);
        cand.gold_tgt_surface.clear();
        spans[k] = std::move(cand);
        break;
      }
    }
  }

  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
}

}  // namespace

std::vector<EntitySpan> detect_entities(const AnnotatedSentence& sent, const NerMode& mode,
                                        const Gazetteer& gazetteer, Rng& rng) {
  mode.validate();
  if (mode.kind == NerMode::Kind::GOLD) return sent.entities;
  std::vector<EntitySpan> spans = gazetteer_matches(sent, gazetteer);
  apply_noise(spans, sent, mode, rng);
  return spans;
}

std::vector<int> rank_candidates(const std::vector<TokenList>& candidates, SelectMode mode,
                                 const TokenList* reference_window,
                                 const std::vector<int64_t>& frequencies) {
  require(!candidates.empty(), "select_candidate: empty candidate list");
  std::vector<int> order(candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  if (mode == SelectMode::TRAIN && reference_window != nullptr) {
    std::string ref = join(*reference_window);
    std::vector<int> dist(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
      dist[i] = levenshtein(join(candidates[i]), ref);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
    return order;
  }

  // INFER (also the TRAIN fallback when no reference window exists, e.g. a
  // noisy span with no gold target).
  require(frequencies.size() == candidates.size(), "select_candidate: frequency count mismatch");
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return frequencies[a] > frequencies[b]; });
  return order;
}

int select_candidate(const std::vector<TokenList>& candidates, SelectMode mode,
                     const TokenList* reference_window, const std::vector<int64_t>& frequencies) {
  return rank_candidates(candidates, mode, reference_window, frequencies)[0];
}

CandidateSet extract_candidates(const AnnotatedSentence& sent, const Dictionary& dict,
                                const TranslitFn& translit, const NerMode& ner_mode,
                                SelectMode select_mode, const Gazetteer* gazetteer, Rng& rng,
                                int max_candidates) {
  require(max_candidates >= 1, "extract_candidates: max_candidates must be >= 1");
  static const Gazetteer kEmpty;
  std::vector<EntitySpan> spans =
      detect_entities(sent, ner_mode, gazetteer ? *gazetteer : kEmpty, rng);

  CandidateSet out;
  for (const auto& span : spans) {
    CandidateEntry entry;
    entry.span = span;

    const auto* hits = dict.lookup(span.src_surface);
    if (hits != nullptr) {
      std::vector<TokenList> cands;
      std::vector<int64_t> freqs;
      for (const auto& h : *hits) {
        cands.push_back(h.tgt_surface);
        freqs.push_back(h.frequency);
      }
      const TokenList* ref =
          (select_mode == SelectMode::TRAIN && !span.gold_tgt_surface.empty()) ? &span.gold_tgt_surface
                                                                               : nullptr;
      std::vector<int> order = rank_candidates(cands, select_mode, ref, freqs);
      int keep = std::min<int>(max_candidates, static_cast<int>(order.size()));
      for (int k = 0; k < keep; ++k) entry.candidates.push_back(cands[order[k]]);
      entry.chosen_index = 0;
      entry.source = CandidateSource::DICT;
    } else if (translit) {
      TokenList cand = translit(span.src_surface, sent.src_tokens);
      if (cand.empty()) continue;  // immediate EOS: nothing to offer the prefix
      entry.candidates.push_back(std::move(cand));
      entry.chosen_index = 0;
      entry.source = CandidateSource::TRANSLIT;
    } else {
      continue;  // uncovered and no pipeline: the entity contributes nothing
    }

    // A candidate is known-incorrect when its span is not a gold entity, or
    // it matches one but offers neither the gold surface nor a dictionary
    // variant of it. Only meaningful when the sentence carries gold targets.
    bool has_gold = false;
    for (const auto& g : sent.entities)
      if (!g.gold_tgt_surface.empty()) has_gold = true;
    if (has_gold) {
      const EntitySpan* gold = nullptr;
      for (const auto& g : sent.entities)
        if (g.start == span.start && g.end == span.end) gold = &g;
      if (gold == nullptr) {
        entry.flagged_incorrect = true;
      } else {
        const TokenList& chosen = entry.candidates[entry.chosen_index];
        bool ok = chosen == gold->gold_tgt_surface;
        if (!ok) {
          if (const auto* gold_hits = dict.lookup(gold->src_surface)) {
            for (const auto& h : *gold_hits)
              if (h.tgt_surface == chosen) ok = true;
          }
        }
        entry.flagged_incorrect = !ok;
      }
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace ea
