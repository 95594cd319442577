#include "ea/transliteration.hpp"

#include <algorithm>
#include <set>

#include "ea/checkpoint.hpp"

namespace ea {

namespace {

TokenList chars_of(const TokenList& surface) {
  TokenList out;
  std::string joined = join(surface, std::string(1, kTokenBoundary));
  for (char c : joined) out.push_back(std::string(1, c));
  return out;
}

TokenList split_boundary(const TokenList& char_tokens) {
  TokenList out;
  std::string cur;
  for (const auto& t : char_tokens) {
    if (t.size() == 1 && t[0] == kTokenBoundary) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += t;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

AnnotatedSentence translit_pair_to_sentence(const TranslitPair& pair, bool tagged) {
  AnnotatedSentence s;
  if (tagged) s.src_tokens.push_back("<" + pair.nationality + ">");
  TokenList src_chars = chars_of(pair.src_surface);
  s.src_tokens.insert(s.src_tokens.end(), src_chars.begin(), src_chars.end());
  s.tgt_tokens = chars_of(pair.tgt_surface);
  return s;
}

TranslitModel TranslitModel::train(const std::vector<TranslitPair>& pairs, const TranslitConfig& cfg,
                                   const std::vector<Nationality>& nationalities,
                                   const std::string& log_path) {
  require(!pairs.empty(), "translit: no training pairs");

  std::vector<AnnotatedSentence> sents;
  sents.reserve(pairs.size());
  for (const auto& p : pairs) sents.push_back(translit_pair_to_sentence(p, cfg.use_nationality_tag));

  std::vector<TokenList> vocab_corpus;
  for (const auto& s : sents) {
    vocab_corpus.push_back(s.src_tokens);
    vocab_corpus.push_back(s.tgt_tokens);
  }

  TranslitModel out;
  out.tagged_ = cfg.use_nationality_tag;
  out.vocab_ = build_vocab(vocab_corpus, /*char_mode=*/true, nationalities);

  ModelConfig mc = cfg.model;
  mc.vocab_size = out.vocab_.size();
  mc.use_prefix = false;
  mc.use_type_embeddings = false;
  out.model_ = Transformer(mc, cfg.train.seed);

  Dictionary empty_dict;
  ExampleBuilder builder;
  builder.vocab = &out.vocab_;
  builder.dict = &empty_dict;
  builder.model_cfg = mc;
  builder.seed = cfg.train.seed;
  train_model(out.model_, sents, builder, cfg.train, log_path);
  return out;
}

TokenList TranslitModel::transliterate(const Nationality& nat, const TokenList& src_surface) const {
  TokenList src;
  if (tagged_) src.push_back("<" + nat + ">");
  TokenList src_chars = chars_of(src_surface);
  src.insert(src.end(), src_chars.begin(), src_chars.end());

  std::vector<int> ids = vocab_.encode(src);
  if (static_cast<int>(ids.size()) > model_.config().max_src_len)
    ids.resize(model_.config().max_src_len);
  EncoderInput enc_in = plain_encoder_input(ids, std::vector<int>(ids.size(), 0));

  DecodeConfig dc;
  dc.strategy = DecodeConfig::Strategy::GREEDY;
  dc.cap_mult = 4;
  dc.cap_add = 4;
  TranslationResult res = translate(model_, vocab_, enc_in, {}, dc);
  return split_boundary(res.tokens);
}

void TranslitModel::save(const std::string& path, const KvMap& extra_meta) const {
  KvMap meta = model_.config().to_kv();
  for (const auto& [k, v] : extra_meta) meta[k] = v;
  meta["tagged"] = tagged_ ? "1" : "0";
  save_checkpoint(path, model_.params(), meta);
  vocab_.save(path + ".vocab");
}

TranslitModel TranslitModel::load(const std::string& path) {
  TranslitModel out;
  KvMap meta;
  ParamStore params = load_checkpoint(path, &meta);
  out.tagged_ = meta.at("tagged") == "1";
  out.vocab_ = Vocab::load(path + ".vocab");
  ModelConfig mc = ModelConfig::from_kv(meta);
  out.model_ = Transformer(mc, 0);
  out.model_.params() = std::move(params);
  return out;
}

TranslitFn make_translit_fn(const TranslitModel* model, const NationalityClassifier* classifier) {
  if (model == nullptr) return TranslitFn();
  return [model, classifier](const TokenList& entity, const TokenList& sentence) -> TokenList {
    Nationality nat = kOther;
    if (model->tagged() && classifier != nullptr) nat = classifier->classify(entity, sentence);
    return model->transliterate(nat, entity);
  };
}

TranslitDataset build_translit_dataset(const Dictionary& dict, const Gazetteer& known,
                                       const WorldConfig& cfg, int conflict_train_surfaces,
                                       int conflict_test_surfaces, int drill_per_nationality) {
  TranslitDataset ds;
  const auto& nats = cfg.nationalities;
  auto rules = make_translit_rule_table(nats);

  // Reversal rules are much harder to fit than plain rotations; repeating
  // those pairs balances the per-rule error.
  auto repeats = [&](const Nationality& nat) { return rules.at(nat).reverse ? 3 : 1; };
  // primary variant per dictionary key
  for (const auto& [src, cands] : dict.all()) {
    const DictEntry& primary = cands.front();
    TokenList surface = split_ws(src);
    for (int r = 0; r < repeats(primary.nationality); ++r)
      ds.train_pairs.push_back({primary.nationality, surface, primary.tgt_surface});
  }

  std::set<std::string> used;
  for (const auto& [surface, type] : known.all()) used.insert(surface);
  for (const auto& [src, cands] : dict.all()) used.insert(src);

  Rng rng(cfg.seed, 0x7155);
  auto fresh_uniform_surface = [&]() {
    for (;;) {
      TokenList surface;
      int n_tokens = static_cast<int>(rng.uniform_int(1, 2));
      for (int t = 0; t < n_tokens; ++t) {
        int len = static_cast<int>(rng.uniform_int(3, 6));
        std::string tok;
        for (int i = 0; i < len; ++i) tok.push_back(static_cast<char>('a' + rng.index(26)));
        surface.push_back(tok);
      }
      if (used.insert(join(surface)).second) return surface;
    }
  };

  for (int i = 0; i < conflict_train_surfaces; ++i) {
    TokenList surface = fresh_uniform_surface();
    for (const auto& nat : nats)
      for (int r = 0; r < repeats(nat); ++r)
        ds.train_pairs.push_back({nat, surface, apply_translit_rule(rules.at(nat), surface)});
  }

  for (const auto& nat : nats) {
    for (int i = 0; i < drill_per_nationality; ++i) {
      TokenList surface = fresh_uniform_surface();
      ds.train_pairs.push_back({nat, surface, apply_translit_rule(rules.at(nat), surface)});
    }
  }

  // ordinary held-out pairs for overall accuracy
  Rng gen_rng(cfg.seed, 0x7156);
  for (EntityType type : kEntityTypes) {
    for (size_t i = 0; i < nats.size() * 4; ++i) {
      for (;;) {
        EntityPair e = gen_entity(type, nats[i % nats.size()], gen_rng);
        if (used.insert(join(e.src_surface)).second) {
          ds.test_pairs.push_back({e.nationality, e.src_surface, e.tgt_surface});
          break;
        }
      }
    }
  }

  // held-out conflicts: every nationality on the same uniform surface, with a
  // context-token sentence for the classifier
  WordMap wmap(cfg);
  for (int i = 0; i < conflict_test_surfaces; ++i) {
    TokenList surface = fresh_uniform_surface();
    for (const auto& nat : nats) {
      ConflictItem item;
      item.pair = {nat, surface, apply_translit_rule(rules.at(nat), surface)};
      item.sentence.push_back(wmap.content_word(static_cast<int>(rng.index(cfg.content_vocab_size))));
      item.sentence.push_back(context_token(nat));
      item.sentence.insert(item.sentence.end(), surface.begin(), surface.end());
      item.sentence.push_back(wmap.content_word(static_cast<int>(rng.index(cfg.content_vocab_size))));
      ds.conflict_test.push_back(std::move(item));
    }
  }
  return ds;
}

std::vector<ClassifierExample> build_classifier_dataset(const std::vector<AnnotatedSentence>& train) {
  std::vector<ClassifierExample> out;
  for (const auto& s : train) {
    for (const auto& e : s.entities) {
      ClassifierExample ex;
      ex.entity = e.src_surface;
      ex.sentence = s.src_tokens;
      ex.label = e.nationality;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace ea
