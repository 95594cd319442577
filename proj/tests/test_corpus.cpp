#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "ea/corpus.hpp"

using namespace ea;

namespace {

// Independent rule oracle: straight-line per-character application.
std::string oracle_rot(const std::string& s, int k) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>('a' + (c - 'a' + k) % 26);
  return out;
}

std::string oracle_rule(const Nationality& nat, const std::string& token) {
  if (nat == "ALPHA") return oracle_rot(token, 1);
  if (nat == "BETA") return oracle_rot(token, 5);
  if (nat == "GAMMA") {
    std::string r(token.rbegin(), token.rend());
    return oracle_rot(r, 2);
  }
  return token;  // OTHER
}

WorldConfig small_config(uint64_t seed = 3) {
  WorldConfig cfg;
  cfg.seed = seed;
  cfg.train_size = 400;
  cfg.val_size = 40;
  cfg.test_size = 120;
  cfg.train_pool_per_type = 40;
  cfg.unseen_pool_per_type = 16;
  return cfg;
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("transliteration rules match the per-character oracle") {
  CHECK(apply_translit_rule("ALPHA", {"abc"}) == TokenList{"bcd"});
  CHECK(apply_translit_rule("GAMMA", {"abz"}) == TokenList{"bdc"});
  CHECK(oracle_rule("GAMMA", "abz") == "bdc");
  CHECK(apply_translit_rule("OTHER", {"qrs"}) == TokenList{"qrs"});

  // token order preserved, rule applied per token
  TokenList two = apply_translit_rule("BETA", {"abc", "xyz"});
  CHECK(two == TokenList{oracle_rule("BETA", "abc"), oracle_rule("BETA", "xyz")});

  auto table = make_translit_rule_table({"ALPHA", "BETA", "GAMMA", "OTHER"});
  CHECK(table.size() == 4);
  CHECK_THROWS(make_translit_rule_table({"DELTA"}));
  CHECK_THROWS(make_translit_rule_table({"ALPHA", "ALPHA"}));
}

TEST_CASE("gen_entity: construction invariant and determinism") {
  Rng r1(9), r2(9);
  for (int i = 0; i < 50; ++i) {
    EntityPair a = gen_entity(EntityType::PER, "GAMMA", r1);
    EntityPair b = gen_entity(EntityType::PER, "GAMMA", r2);
    CHECK(a.src_surface == b.src_surface);
    CHECK(a.tgt_surface == b.tgt_surface);
    TokenList expect;
    for (const auto& t : a.src_surface) expect.push_back(oracle_rule("GAMMA", t));
    CHECK(a.tgt_surface == expect);
    CHECK(a.src_surface.size() >= 1);
    CHECK(a.src_surface.size() <= 2);
    for (const auto& t : a.src_surface) {
      CHECK(t.size() >= 3);
      CHECK(t.size() <= 6);
    }
  }
  // ALPHA letters predominantly a-i
  Rng r3(4);
  int pref = 0, total = 0;
  for (int i = 0; i < 200; ++i) {
    EntityPair e = gen_entity(EntityType::PER, "ALPHA", r3);
    for (const auto& t : e.src_surface)
      for (char c : t) {
        total++;
        if (c >= 'a' && c <= 'i') pref++;
      }
  }
  CHECK(static_cast<double>(pref) / total > 0.6);
}

TEST_CASE("zero-entity sentences are the pairwise-swapped word-mapped source") {
  WorldConfig cfg = small_config();
  World w = gen_corpus(cfg);
  WordMap wmap(cfg);
  int seen = 0;
  for (const auto& s : w.train) {
    if (!s.entities.empty()) continue;
    seen++;
    TokenList mapped;
    for (const auto& t : s.src_tokens) mapped.push_back(wmap.map(t));
    // oracle swap, written out longhand
    TokenList swapped = mapped;
    for (size_t i = 0; i + 1 < swapped.size(); i += 2) {
      std::string tmp = swapped[i];
      swapped[i] = swapped[i + 1];
      swapped[i + 1] = tmp;
    }
    CHECK(s.tgt_tokens == swapped);
  }
  CHECK(seen > 0);
}

TEST_CASE("full target re-derivation oracle reproduces tgt_tokens") {
  WorldConfig cfg = small_config(11);
  World w = gen_corpus(cfg);
  WordMap wmap(cfg);
  auto check_split = [&](const std::vector<AnnotatedSentence>& split) {
    for (const auto& s : split) {
      // strip entities from the source
      TokenList content;
      size_t e = 0;
      for (size_t i = 0; i < s.src_tokens.size();) {
        if (e < s.entities.size() && static_cast<int>(i) == s.entities[e].start) {
          i = s.entities[e].end;
          e++;
        } else {
          content.push_back(s.src_tokens[i]);
          i++;
        }
      }
      TokenList mapped;
      for (const auto& t : content) mapped.push_back(wmap.map(t));
      TokenList swapped = mapped;
      for (size_t i = 0; i + 1 < swapped.size(); i += 2) std::swap(swapped[i], swapped[i + 1]);
      // re-insert gold target surfaces at their spans
      TokenList derived = swapped;
      for (const auto& ent : s.entities)
        derived.insert(derived.begin() + ent.tgt_start, ent.gold_tgt_surface.begin(),
                       ent.gold_tgt_surface.end());
      CHECK(derived == s.tgt_tokens);
    }
  };
  check_split(w.train);
  check_split(w.val);
  check_split(w.test);
}

TEST_CASE("entity span invariants hold on every split") {
  World w = gen_corpus(small_config(21));
  auto check_split = [&](const std::vector<AnnotatedSentence>& split) {
    for (const auto& s : split) {
      int prev_end = 0, prev_tgt_end = 0;
      for (const auto& ent : s.entities) {
        CHECK(ent.start >= prev_end);
        CHECK(ent.end > ent.start);
        CHECK(ent.end <= static_cast<int>(s.src_tokens.size()));
        CHECK(ent.tgt_start >= prev_tgt_end);
        CHECK(ent.tgt_end <= static_cast<int>(s.tgt_tokens.size()));
        TokenList src_slice(s.src_tokens.begin() + ent.start, s.src_tokens.begin() + ent.end);
        CHECK(src_slice == ent.src_surface);
        TokenList tgt_slice(s.tgt_tokens.begin() + ent.tgt_start, s.tgt_tokens.begin() + ent.tgt_end);
        CHECK(tgt_slice == ent.gold_tgt_surface);
        prev_end = ent.end;
        prev_tgt_end = ent.tgt_end;
      }
    }
  };
  check_split(w.train);
  check_split(w.test);
}

TEST_CASE("dictionary coverage and candidate structure") {
  WorldConfig cfg = small_config(5);
  cfg.train_pool_per_type = 150;
  World w = gen_corpus(cfg);

  // PER coverage ~ 0.4 +- 0.05, measured on the generated PER pool
  int per_pool = 0, per_covered = 0;
  for (const auto& e : w.train_pool) {
    if (e.type != EntityType::PER) continue;
    per_pool++;
    if (w.dict.lookup(e.src_surface)) per_covered++;
  }
  double coverage = static_cast<double>(per_covered) / per_pool;
  CHECK(coverage > 0.35);
  CHECK(coverage < 0.45);

  // every candidate is rule(s) or rule(s) with the final character doubled
  for (const auto& [src, cands] : w.dict_full.all()) {
    TokenList surface = split_ws(src);
    CHECK(cands.size() >= 1);
    CHECK(cands.size() <= 2);
    TokenList primary;
    for (const auto& t : surface) primary.push_back(oracle_rule(cands[0].nationality, t));
    CHECK(cands[0].tgt_surface == primary);
    if (cands.size() == 2) {
      TokenList dup = primary;
      dup.back().push_back(dup.back().back());
      CHECK(cands[1].tgt_surface == dup);
    }
  }

  // training dictionary is a subset of the full dictionary
  for (const auto& [src, cands] : w.dict.all()) {
    const auto* full = w.dict_full.lookup(split_ws(src));
    REQUIRE(full != nullptr);
    CHECK(full->size() == cands.size());
  }

  // 2-variant references use either variant
  for (const auto& s : w.train) {
    for (const auto& ent : s.entities) {
      const auto* cands = w.dict.lookup(ent.src_surface);
      if (!cands) continue;
      bool found = false;
      for (const auto& c : *cands)
        if (c.tgt_surface == ent.gold_tgt_surface) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("unseen test entities never occur in training sentences") {
  World w = gen_corpus(small_config(31));
  std::set<std::string> train_surfaces;
  for (const auto& s : w.train)
    for (const auto& e : s.entities) train_surfaces.insert(join(e.src_surface));

  REQUIRE(w.test_unseen.size() == w.test.size());
  int unseen_entities = 0;
  for (size_t i = 0; i < w.test.size(); ++i) {
    if (!w.test_unseen[i]) continue;
    CHECK(!w.test[i].entities.empty());
    for (const auto& e : w.test[i].entities) {
      CHECK(train_surfaces.count(join(e.src_surface)) == 0);
      unseen_entities++;
    }
  }
  CHECK(unseen_entities > 20);

  // pool-level disjointness
  std::set<std::string> train_pool_surfaces;
  for (const auto& e : w.train_pool) train_pool_surfaces.insert(join(e.src_surface));
  for (const auto& e : w.unseen_pool) CHECK(train_pool_surfaces.count(join(e.src_surface)) == 0);
}

TEST_CASE("replaying gen_corpus yields byte-identical artifacts") {
  WorldConfig cfg = small_config(8);
  World a = gen_corpus(cfg);
  World b = gen_corpus(cfg);
  save_corpus("/tmp/ea_corpus_a.jsonl", a.train);
  save_corpus("/tmp/ea_corpus_b.jsonl", b.train);
  CHECK(file_bytes("/tmp/ea_corpus_a.jsonl") == file_bytes("/tmp/ea_corpus_b.jsonl"));
  a.dict.save("/tmp/ea_dict_a.tsv");
  b.dict.save("/tmp/ea_dict_b.tsv");
  CHECK(file_bytes("/tmp/ea_dict_a.tsv") == file_bytes("/tmp/ea_dict_b.tsv"));
  a.gazetteer.save("/tmp/ea_gaz_a.txt");
  b.gazetteer.save("/tmp/ea_gaz_b.txt");
  CHECK(file_bytes("/tmp/ea_gaz_a.txt") == file_bytes("/tmp/ea_gaz_b.txt"));

  // different seed -> different corpus
  cfg.seed = 9;
  World c = gen_corpus(cfg);
  save_corpus("/tmp/ea_corpus_c.jsonl", c.train);
  CHECK(file_bytes("/tmp/ea_corpus_a.jsonl") != file_bytes("/tmp/ea_corpus_c.jsonl"));
}

TEST_CASE("corpus and dictionary files round trip") {
  World w = gen_corpus(small_config(13));
  save_corpus("/tmp/ea_corpus_rt.jsonl", w.test);
  auto loaded = load_corpus("/tmp/ea_corpus_rt.jsonl");
  REQUIRE(loaded.size() == w.test.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].src_tokens == w.test[i].src_tokens);
    CHECK(loaded[i].tgt_tokens == w.test[i].tgt_tokens);
    REQUIRE(loaded[i].entities.size() == w.test[i].entities.size());
    for (size_t k = 0; k < loaded[i].entities.size(); ++k) {
      CHECK(loaded[i].entities[k].src_surface == w.test[i].entities[k].src_surface);
      CHECK(loaded[i].entities[k].gold_tgt_surface == w.test[i].entities[k].gold_tgt_surface);
      CHECK(loaded[i].entities[k].nationality == w.test[i].entities[k].nationality);
    }
  }

  w.dict.save("/tmp/ea_dict_rt.tsv");
  Dictionary d = Dictionary::load("/tmp/ea_dict_rt.tsv");
  CHECK(d.n_keys() == w.dict.n_keys());
  CHECK(d.n_entries() == w.dict.n_entries());

  w.gazetteer.save("/tmp/ea_gaz_rt.txt");
  Gazetteer g = Gazetteer::load("/tmp/ea_gaz_rt.txt", &w.dict_full);
  CHECK(g.size() == w.gazetteer.size());
  for (const auto& [surface, type] : w.gazetteer.all()) CHECK(g.type_of(surface) == type);
}

TEST_CASE("config invariants are enforced") {
  WorldConfig cfg = small_config();
  cfg.dict_coverage[EntityType::PER] = 1.5;
  CHECK_THROWS(gen_corpus(cfg));
  cfg = small_config();
  cfg.sent_len_min = 9;
  cfg.sent_len_max = 3;
  CHECK_THROWS(gen_corpus(cfg));
  cfg = small_config();
  cfg.nationalities = {"ALPHA", "ALPHA"};
  CHECK_THROWS(gen_corpus(cfg));
}

TEST_CASE("dictionary subsample keeps exact per-type fractions") {
  World w = gen_corpus(small_config(17));
  Dictionary half = w.dict_full.subsample(0.5, 99);
  std::map<EntityType, int> full_count, half_count;
  for (const auto& [k, v] : w.dict_full.all()) full_count[v.front().type]++;
  for (const auto& [k, v] : half.all()) half_count[v.front().type]++;
  for (EntityType t : kEntityTypes)
    CHECK(half_count[t] == static_cast<int>(std::llround(0.5 * full_count[t])));
  // subsample(1.0) is the identity
  Dictionary all = w.dict_full.subsample(1.0, 99);
  CHECK(all.n_entries() == w.dict_full.n_entries());
}
