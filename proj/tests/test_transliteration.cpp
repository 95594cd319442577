#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ea/evaluation.hpp"
#include "ea/transliteration.hpp"

using namespace ea;

namespace {

const std::vector<Nationality> kNats = {"ALPHA", "BETA", "GAMMA", "OTHER"};

std::vector<TranslitPair> drill_pairs(int per_nat, int token_len, Rng& rng) {
  auto rules = make_translit_rule_table(kNats);
  std::vector<TranslitPair> out;
  for (const auto& nat : kNats) {
    for (int i = 0; i < per_nat; ++i) {
      std::string tok;
      for (int k = 0; k < token_len; ++k) tok.push_back(static_cast<char>('a' + rng.index(26)));
      TokenList surface{tok};
      out.push_back({nat, surface, apply_translit_rule(rules.at(nat), surface)});
    }
  }
  return out;
}

TranslitConfig fast_config(int steps) {
  TranslitConfig tc;
  tc.model.hidden_dim = 32;
  tc.model.ffn_dim = 64;
  tc.model.dropout = 0.0;
  tc.train.max_steps = steps;
  tc.train.warmup_steps = std::max(1, steps / 10);
  tc.train.peak_lr = 3e-3;
  tc.train.batch_size = 32;
  tc.train.log_every = 1000;
  tc.train.num_threads = 2;
  return tc;
}

}  // namespace

TEST_CASE("pair-to-sentence layout: tag first, boundary char between tokens") {
  TranslitPair p{"ALPHA", {"ab", "cd"}, {"bc", "de"}};
  AnnotatedSentence tagged = translit_pair_to_sentence(p, true);
  CHECK(tagged.src_tokens == TokenList{"<ALPHA>", "a", "b", "_", "c", "d"});
  CHECK(tagged.tgt_tokens == TokenList{"b", "c", "_", "d", "e"});
  // nationality-agnostic ablation trains with the tag stripped
  AnnotatedSentence bare = translit_pair_to_sentence(p, false);
  CHECK(bare.src_tokens == TokenList{"a", "b", "_", "c", "d"});
}

TEST_CASE("zero training steps leave parameters at initialization") {
  Rng rng(3);
  auto pairs = drill_pairs(10, 3, rng);
  TranslitConfig tc = fast_config(0);
  TranslitModel m = TranslitModel::train(pairs, tc, kNats);

  ModelConfig mc = tc.model;
  mc.vocab_size = m.char_vocab().size();
  mc.use_prefix = false;
  mc.use_type_embeddings = false;
  ParamStore fresh;
  init_params(fresh, mc, tc.train.seed);
  for (const auto& [name, tensor] : fresh.tensors) {
    const Matrix& got = m.transformer().params().at(name);
    REQUIRE(got.same_shape(tensor));
    for (size_t i = 0; i < tensor.size(); ++i) CHECK(got.data()[i] == tensor.data()[i]);
  }
}

TEST_CASE("length cap: output never exceeds 4x input + 4") {
  Rng rng(5);
  auto pairs = drill_pairs(6, 3, rng);
  TranslitModel m = TranslitModel::train(pairs, fast_config(0), kNats);  // untrained: arbitrary outputs
  for (const auto& nat : kNats) {
    TokenList out = m.transliterate(nat, {"abcd", "efg"});
    size_t in_chars = 8;  // "abcd_efg"
    size_t out_chars = join(out, "_").size();
    CHECK(out_chars <= 4 * in_chars + 4);
  }
}

TEST_CASE("overfit 50 pairs to loss < 0.05") {
  Rng rng(7);
  auto all = drill_pairs(13, 4, rng);
  all.resize(50);
  TranslitConfig tc = fast_config(700);
  std::vector<AnnotatedSentence> sents;
  for (const auto& p : all) sents.push_back(translit_pair_to_sentence(p, true));
  TranslitModel m = TranslitModel::train(all, tc, kNats);
  // teacher-forced loss over the training pairs
  std::vector<TokenList> vocab_corpus;
  double total = 0.0;
  EncoderCache enc;
  DecoderCache dec;
  for (const auto& s : sents) {
    std::vector<int> src = m.char_vocab().encode(s.src_tokens);
    EncoderInput in = plain_encoder_input(src, std::vector<int>(src.size(), 0));
    DecoderInput di = make_decoder_input({}, m.char_vocab().encode(s.tgt_tokens));
    m.transformer().encode(in, enc);
    m.transformer().decode(di, enc.states, dec);
    total += Transformer::loss(dec.logits, di.labels, di.loss_mask, nullptr);
  }
  CHECK(total / sents.size() < 0.05);
}

TEST_CASE("converged model applies the rules, including identity for OTHER") {
  Rng rng(11);
  auto pairs = drill_pairs(300, 3, rng);
  TranslitConfig tc = fast_config(3000);
  TranslitModel m = TranslitModel::train(pairs, tc, kNats);
  int ok = 0, n = 0;
  auto rules = make_translit_rule_table(kNats);
  Rng eval_rng(400);
  for (int i = 0; i < 30; ++i) {
    std::string tok;
    for (int k = 0; k < 3; ++k) tok.push_back(static_cast<char>('a' + eval_rng.index(26)));
    for (const auto& nat : kNats) {
      n++;
      if (m.transliterate(nat, {tok}) == apply_translit_rule(rules.at(nat), {tok})) ok++;
    }
  }
  CHECK(static_cast<double>(ok) / n > 0.9);
  CHECK(m.transliterate("ALPHA", {"abc"}) == TokenList{"bcd"});
  CHECK(m.transliterate("OTHER", {"qrs"}) == TokenList{"qrs"});
}

TEST_CASE("translit model round trips through its checkpoint") {
  Rng rng(13);
  auto pairs = drill_pairs(8, 3, rng);
  TranslitModel m = TranslitModel::train(pairs, fast_config(30), kNats);
  m.save("/tmp/ea_translit_rt.bin");
  TranslitModel back = TranslitModel::load("/tmp/ea_translit_rt.bin");
  CHECK(back.tagged() == m.tagged());
  CHECK(back.char_vocab().size() == m.char_vocab().size());
  for (const auto& nat : kNats)
    CHECK(back.transliterate(nat, {"abc", "de"}) == m.transliterate(nat, {"abc", "de"}));
}

TEST_CASE("translit fn classifies, tags and transliterates") {
  Rng rng(17);
  auto pairs = drill_pairs(8, 3, rng);
  TranslitModel m = TranslitModel::train(pairs, fast_config(30), kNats);

  // classifier trained on context tokens only
  std::vector<ClassifierExample> cex;
  for (int i = 0; i < 200; ++i) {
    Nationality nat = kNats[i % kNats.size()];
    std::string tok;
    for (int k = 0; k < 4; ++k) tok.push_back(static_cast<char>('a' + rng.index(26)));
    cex.push_back({{tok}, {context_token(nat), tok}, nat});
  }
  ClassifierConfig ccfg;
  ccfg.min_label_count = 10;
  NationalityClassifier clf = NationalityClassifier::train(cex, ccfg, kNats);

  TranslitFn fn = make_translit_fn(&m, &clf);
  REQUIRE(static_cast<bool>(fn));
  TokenList cand = fn({"abc"}, {context_token("BETA"), "abc"});
  CHECK(cand == m.transliterate("BETA", {"abc"}));

  // null model disables the hook
  CHECK_FALSE(static_cast<bool>(make_translit_fn(nullptr, &clf)));
}

TEST_CASE("dataset builder: conflicts are cross-nationality and held out") {
  WorldConfig cfg;
  cfg.seed = 23;
  cfg.train_size = 30;
  cfg.val_size = 5;
  cfg.test_size = 10;
  cfg.train_pool_per_type = 12;
  cfg.unseen_pool_per_type = 6;
  World w = gen_corpus(cfg);
  TranslitDataset ds = build_translit_dataset(w.dict, w.gazetteer, cfg, 10, 6, 20);

  // conflict test: every nationality appears on each surface
  std::map<std::string, std::set<Nationality>> by_surface;
  for (const auto& item : ds.conflict_test) by_surface[join(item.pair.src_surface)].insert(item.pair.nationality);
  CHECK(by_surface.size() == 6);
  for (const auto& [s, nats] : by_surface) CHECK(nats.size() == cfg.nationalities.size());

  // held out from training pairs
  std::set<std::string> train_surfaces;
  for (const auto& p : ds.train_pairs) train_surfaces.insert(join(p.src_surface));
  for (const auto& item : ds.conflict_test) CHECK(train_surfaces.count(join(item.pair.src_surface)) == 0);
  for (const auto& p : ds.test_pairs) CHECK(train_surfaces.count(join(p.src_surface)) == 0);

  // conflict sentences carry the context token
  for (const auto& item : ds.conflict_test) {
    bool has_ctx = false;
    for (const auto& t : item.sentence)
      if (t == context_token(item.pair.nationality)) has_ctx = true;
    CHECK(has_ctx);
  }

  // every pair respects its rule
  auto rules = make_translit_rule_table(cfg.nationalities);
  for (const auto& p : ds.train_pairs)
    CHECK(p.tgt_surface == apply_translit_rule(rules.at(p.nationality), p.src_surface));
}

TEST_CASE("classifier dataset mirrors training-corpus entities") {
  WorldConfig cfg;
  cfg.seed = 29;
  cfg.train_size = 60;
  cfg.val_size = 5;
  cfg.test_size = 10;
  cfg.train_pool_per_type = 12;
  cfg.unseen_pool_per_type = 6;
  World w = gen_corpus(cfg);
  auto examples = build_classifier_dataset(w.train);
  size_t want = 0;
  for (const auto& s : w.train) want += s.entities.size();
  CHECK(examples.size() == want);
  for (const auto& ex : examples) CHECK(!ex.entity.empty());
}
