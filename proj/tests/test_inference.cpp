#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ea/inference.hpp"

using namespace ea;

namespace {

const std::vector<Nationality> kNats = {"ALPHA", "BETA", "GAMMA", "OTHER"};

struct Setup {
  Vocab vocab;
  ModelConfig cfg;
  Transformer model;

  Setup()
      : vocab(build_vocab(
            {{"w1", "w2", "w3", "w4", "w5", "x1", "x2", "x3", "x4", "x5", "y1", "y2"}}, false, kNats)),
        cfg(make_cfg(vocab)),
        model(cfg, 77) {}

  static ModelConfig make_cfg(const Vocab& v) {
    ModelConfig c;
    c.layers = 2;
    c.hidden_dim = 16;
    c.heads = 2;
    c.ffn_dim = 32;
    c.dropout = 0.0;
    c.max_src_len = 24;
    c.max_prefix_len = 12;
    c.max_tgt_len = 24;
    c.vocab_size = v.size();
    c.use_prefix = true;
    c.use_type_embeddings = true;
    return c;
  }

  EncoderInput random_src(Rng& rng, int len = 5) const {
    std::vector<int> ids, tags;
    for (int i = 0; i < len; ++i) {
      ids.push_back(vocab.n_special() + static_cast<int>(rng.index(vocab.size() - vocab.n_special())));
      tags.push_back(0);
    }
    return plain_encoder_input(ids, tags);
  }
};

}  // namespace

TEST_CASE("beam_size=1 matches greedy on 100 random sentences") {
  Setup s;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    EncoderInput src = s.random_src(rng, 3 + static_cast<int>(rng.index(5)));
    DecodeConfig greedy;
    greedy.strategy = DecodeConfig::Strategy::GREEDY;
    DecodeConfig beam1;
    beam1.strategy = DecodeConfig::Strategy::BEAM;
    beam1.beam_size = 1;
    beam1.length_penalty = 0.0;
    TranslationResult a = translate(s.model, s.vocab, src, {}, greedy);
    TranslationResult b = translate(s.model, s.vocab, src, {}, beam1);
    CHECK(a.raw_ids == b.raw_ids);
    // alpha != 0 cannot change a single-hypothesis beam either
    beam1.length_penalty = 0.6;
    TranslationResult c = translate(s.model, s.vocab, src, {}, beam1);
    CHECK(a.raw_ids == c.raw_ids);
  }
}

TEST_CASE("output never contains SEP, SEP2, BOS, EOS or PAD") {
  Setup s;
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    EncoderInput src = s.random_src(rng);
    std::vector<int> prefix = {s.vocab.id("x1"), Vocab::kSep, s.vocab.id("x2")};
    TranslationResult r = translate(s.model, s.vocab, src, prefix, DecodeConfig{});
    for (const auto& tok : r.tokens) {
      CHECK(tok != "[SEP]");
      CHECK(tok != "[SEP2]");
      CHECK(tok != "<bos>");
      CHECK(tok != "<eos>");
      CHECK(tok != "<pad>");
    }
  }
}

TEST_CASE("prefix positions replay the teacher-forcing trace exactly") {
  Setup s;
  Rng rng(11);
  EncoderInput src = s.random_src(rng, 6);
  std::vector<int> prefix = {s.vocab.id("x1"), s.vocab.id("x2"), Vocab::kSep, s.vocab.id("x3")};
  TranslationResult r = translate(s.model, s.vocab, src, prefix, DecodeConfig{}, true);

  // teacher-force the generated sequence and compare every step's logit row
  EncoderCache enc;
  DecoderCache dec;
  s.model.encode(src, enc);
  DecoderInput full = make_decoder_input(prefix, r.raw_ids);
  s.model.decode(full, enc.states, dec);
  REQUIRE(r.step_logits.size() >= r.raw_ids.size());
  for (size_t k = 0; k < r.raw_ids.size(); ++k) {
    size_t row = prefix.size() + k;  // the row that produced token k
    for (size_t j = 0; j < dec.logits.cols(); ++j)
      CHECK(r.step_logits[k](0, j) == dec.logits(row, j));
  }
}

TEST_CASE("empty prefix decoding equals a plain-config model on shared weights") {
  Setup s;
  ModelConfig plain_cfg = s.cfg;
  plain_cfg.use_prefix = false;
  plain_cfg.use_type_embeddings = false;
  Transformer plain(plain_cfg, 1);
  plain.params() = s.model.params();  // shared weights

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    EncoderInput src = s.random_src(rng);
    TranslationResult a = translate(s.model, s.vocab, src, {}, DecodeConfig{});
    TranslationResult b = translate(plain, s.vocab, src, {}, DecodeConfig{});
    CHECK(a.raw_ids == b.raw_ids);
  }
}

TEST_CASE("replacement with a synthetic diagonal attention map") {
  // copy task: output j aligns to source j; entity at source [2,4)
  TokenList output{"t0", "t1", "t2", "t3", "t4"};
  Matrix attn(5, 5);
  for (int i = 0; i < 5; ++i) attn(i, i) = 1.0;
  CandidateSet cands;
  CandidateEntry e;
  e.span.start = 2;
  e.span.end = 4;
  e.candidates = {{"CAND", "X"}};
  cands.push_back(e);
  int skipped = -1;
  TokenList out = replacement_postprocess(output, attn, 0, 5, cands, &skipped);
  CHECK(out == TokenList{"t0", "t1", "CAND", "X", "t4"});
  CHECK(skipped == 0);

  // no entities -> unchanged
  TokenList same = replacement_postprocess(output, attn, 0, 5, {}, &skipped);
  CHECK(same == output);

  // replaced output contains the candidate contiguously
  bool found = false;
  for (size_t i = 0; i + 1 < out.size(); ++i)
    if (out[i] == "CAND" && out[i + 1] == "X") found = true;
  CHECK(found);

  // empty hull (attention never lands in the span) -> skip and count
  Matrix off(5, 5);
  for (int i = 0; i < 5; ++i) off(i, 0) = 1.0;
  TokenList out2 = replacement_postprocess(output, off, 0, 5, cands, &skipped);
  CHECK(out2 == output);
  CHECK(skipped == 1);

  // overlapping hulls resolve left-to-right; later entities skip consumed rows
  CandidateSet two;
  CandidateEntry a1;
  a1.span.start = 0;
  a1.span.end = 3;
  a1.candidates = {{"A"}};
  CandidateEntry a2;
  a2.span.start = 2;
  a2.span.end = 5;
  a2.candidates = {{"B"}};
  two.push_back(a1);
  two.push_back(a2);
  Matrix wide(5, 5);
  // outputs 0..2 argmax source 2 (inside both spans), 3..4 source 4 (second only)
  for (int i = 0; i < 3; ++i) wide(i, 2) = 1.0;
  for (int i = 3; i < 5; ++i) wide(i, 4) = 1.0;
  TokenList out3 = replacement_postprocess(output, wide, 0, 5, two, &skipped);
  CHECK(out3 == TokenList{"A", "B"});
}

TEST_CASE("placeholder transform: typed, indexed, capped at 4 per type") {
  Vocab v = build_vocab({{"w1", "w2"}}, false, kNats);
  AnnotatedSentence s;
  s.src_tokens = {"e1", "w1", "e2", "e2b", "w2"};
  s.tgt_tokens = {"E1", "w1t", "E2", "w2t"};
  EntitySpan a;
  a.start = 0;
  a.end = 1;
  a.type = EntityType::PER;
  a.src_surface = {"e1"};
  a.gold_tgt_surface = {"E1"};
  a.tgt_start = 0;
  a.tgt_end = 1;
  EntitySpan b;
  b.start = 2;
  b.end = 4;
  b.type = EntityType::PER;
  b.src_surface = {"e2", "e2b"};
  b.gold_tgt_surface = {"E2"};
  b.tgt_start = 2;
  b.tgt_end = 3;
  s.entities = {a, b};

  AnnotatedSentence t = placeholder_transform(s, v);
  CHECK(t.src_tokens == TokenList{"PLH_PER_1", "w1", "PLH_PER_2", "w2"});
  CHECK(t.tgt_tokens == TokenList{"PLH_PER_1", "w1t", "PLH_PER_2", "w2t"});

  // 5 same-type entities: the fifth keeps its surface
  AnnotatedSentence many;
  for (int i = 0; i < 5; ++i) {
    many.src_tokens.push_back("e" + std::to_string(i));
    many.tgt_tokens.push_back("E" + std::to_string(i));
    EntitySpan es;
    es.start = i;
    es.end = i + 1;
    es.type = EntityType::LOC;
    es.src_surface = {many.src_tokens.back()};
    es.gold_tgt_surface = {many.tgt_tokens.back()};
    es.tgt_start = i;
    es.tgt_end = i + 1;
    many.entities.push_back(es);
  }
  AnnotatedSentence tm = placeholder_transform(many, v);
  CHECK(tm.src_tokens[4] == "e4");
  CHECK(tm.src_tokens[0] == "PLH_LOC_1");
  CHECK(tm.src_tokens[3] == "PLH_LOC_4");
}

TEST_CASE("placeholder pipeline: zero entities equals plain decode") {
  Setup s;
  Rng rng(21);
  EncoderInput src = s.random_src(rng);
  AnnotatedSentence sent;
  for (int id : src.ids) sent.src_tokens.push_back(s.vocab.token(id));
  TokenList via_pipeline = placeholder_pipeline(s.model, s.vocab, sent, {}, DecodeConfig{});
  TranslationResult plain = translate(s.model, s.vocab, src, {}, DecodeConfig{});
  CHECK(via_pipeline == plain.tokens);
}

TEST_CASE("placeholder restoration substitutes candidates for emitted placeholders") {
  std::vector<std::pair<std::string, TokenList>> mapping = {
      {"PLH_PER_1", {"bcd"}},
      {"PLH_LOC_1", {"qqq", "rrr"}},
  };
  PlaceholderStats stats;
  TokenList out = restore_placeholders({"w1", "PLH_PER_1", "w2"}, mapping, &stats);
  CHECK(out == TokenList{"w1", "bcd", "w2"});
  CHECK(stats.missing_placeholders == 1);  // PLH_LOC_1 never emitted
  CHECK(stats.duplicate_placeholders == 0);

  // duplicate emission: both replaced, counted once
  PlaceholderStats dup;
  TokenList out2 = restore_placeholders({"PLH_PER_1", "x", "PLH_PER_1"}, {{"PLH_PER_1", {"b"}}}, &dup);
  CHECK(out2 == TokenList{"b", "x", "b"});
  CHECK(dup.duplicate_placeholders == 1);
  CHECK(dup.missing_placeholders == 0);

  // multi-token candidate expands in place
  TokenList out3 = restore_placeholders({"PLH_LOC_1"}, mapping, nullptr);
  CHECK(out3 == TokenList{"qqq", "rrr"});
}

TEST_CASE("dictionary corpus augmentation") {
  std::vector<AnnotatedSentence> corpus(3);
  Dictionary dict;
  dict.add({"aaa"}, DictEntry{{"bbb"}, EntityType::PER, "ALPHA", 1});
  dict.add({"aaa"}, DictEntry{{"bbbb"}, EntityType::PER, "ALPHA", 0});
  dict.add({"ccc"}, DictEntry{{"ddd"}, EntityType::LOC, "BETA", 2});

  auto aug = transformer_with_dictionary_corpus(corpus, dict);
  CHECK(aug.size() == corpus.size() + dict.n_entries());
  for (size_t i = corpus.size(); i < aug.size(); ++i) {
    CHECK(aug[i].entities.empty());
    CHECK(!aug[i].src_tokens.empty());
    CHECK(!aug[i].tgt_tokens.empty());
  }

  Dictionary empty;
  CHECK(transformer_with_dictionary_corpus(corpus, empty).size() == corpus.size());
}
