#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ea/rng.hpp"
#include "ea/types.hpp"
#include "ea/util.hpp"

namespace ea {

// Per-nationality character rule: optional within-token reversal, then a
// fixed alphabet rotation. ALPHA=+1, BETA=+5, GAMMA=reverse+2, OTHER=identity.
struct TranslitRule {
  int rotate = 0;
  bool reverse = false;
};

std::map<Nationality, TranslitRule> make_translit_rule_table(const std::vector<Nationality>& nationalities);

TokenList apply_translit_rule(const TranslitRule& rule, const TokenList& surface);
TokenList apply_translit_rule(const Nationality& nat, const TokenList& surface);

struct WorldConfig {
  uint64_t seed = 1;
  int content_vocab_size = 200;
  int sent_len_min = 5, sent_len_max = 12;
  int ents_min = 0, ents_max = 2;
  std::vector<Nationality> nationalities = {"ALPHA", "BETA", "GAMMA", "OTHER"};
  std::map<EntityType, double> dict_coverage = {
      {EntityType::PER, 0.4}, {EntityType::LOC, 0.8}, {EntityType::ORG, 0.8}};
  double multi_candidate_fraction = 0.3;
  double context_token_prob = 0.8;
  int train_size = 20000, val_size = 1000, test_size = 2000;
  int train_pool_per_type = 150;
  int unseen_pool_per_type = 60;
  double unseen_fraction = 0.5;  // share of test sentences drawn from the unseen pool

  void validate() const;
};

struct EntitySpan {
  int start = 0, end = 0;  // [start, end) in src_tokens
  EntityType type = EntityType::PER;
  Nationality nationality;
  TokenList src_surface;
  TokenList gold_tgt_surface;
  int tgt_start = 0, tgt_end = 0;  // [tgt_start, tgt_end) in tgt_tokens
};

struct AnnotatedSentence {
  TokenList src_tokens;
  TokenList tgt_tokens;
  std::vector<EntitySpan> entities;
};

struct EntityPair {
  TokenList src_surface;
  TokenList tgt_surface;
  EntityType type = EntityType::PER;
  Nationality nationality;
  int64_t frequency = 0;  // occurrences in the training corpus
};

struct DictEntry {
  TokenList tgt_surface;
  EntityType type = EntityType::PER;
  Nationality nationality;
  int64_t frequency = 0;
};

// Multimap source surface -> ranked target candidates. File order per key is
// the rank; lookups key on the space-joined surface.
class Dictionary {
 public:
  void add(const TokenList& src_surface, DictEntry entry);
  const std::vector<DictEntry>* lookup(const TokenList& surface) const;
  std::vector<DictEntry>* lookup_mut(const TokenList& surface);

  size_t n_keys() const { return entries_.size(); }
  size_t n_entries() const;
  const std::map<std::string, std::vector<DictEntry>>& all() const { return entries_; }

  // Keeps each key with probability `fraction` (seeded); used by the
  // coverage sweep.
  Dictionary subsample(double fraction, uint64_t seed) const;

  void save(const std::string& path) const;
  static Dictionary load(const std::string& path);

 private:
  std::map<std::string, std::vector<DictEntry>> entries_;
};

// Known entity surfaces for longest-match detection. The file format is one
// surface per line; types are recoverable from a dictionary when reloading.
class Gazetteer {
 public:
  void add(const TokenList& surface, EntityType type);
  bool contains_joined(const std::string& joined) const { return types_.count(joined) > 0; }
  std::optional<EntityType> type_of(const std::string& joined) const;
  int max_tokens() const { return max_tokens_; }
  size_t size() const { return types_.size(); }
  const std::map<std::string, EntityType>& all() const { return types_; }

  void save(const std::string& path) const;
  static Gazetteer load(const std::string& path, const Dictionary* type_source = nullptr);

 private:
  std::map<std::string, EntityType> types_;
  int max_tokens_ = 0;
};

struct World {
  WorldConfig config;
  std::vector<AnnotatedSentence> train, val, test;
  std::vector<uint8_t> test_unseen;  // parallel to test: 1 = all entities unseen in training
  Dictionary dict;                   // training dictionary (per-type coverage of the train pool)
  Dictionary dict_full;              // every pool entity at coverage 1.0, for coverage sweeps
  Gazetteer gazetteer;
  std::vector<EntityPair> train_pool, unseen_pool;
};

// Source context token carried by sentences about an entity's nationality,
// and its target-side image under the word map.
std::string context_token(const Nationality& nat);
std::string context_token_tgt(const Nationality& nat);

EntityPair gen_entity(EntityType type, const Nationality& nat, Rng& rng);

World gen_corpus(const WorldConfig& config);

// Deterministic source->target content word map (seeded bijection plus the
// context token rule). Unknown tokens are rejected.
class WordMap {
 public:
  WordMap(const WorldConfig& config);
  std::string map(const std::string& src_token) const;
  std::string content_word(int i) const;         // "s###"
  std::string target_content_word(int i) const;  // "t###"

 private:
  std::map<std::string, std::string> map_;
};

std::vector<std::string> pairwise_swap(const std::vector<std::string>& tokens);

// Corpus record I/O: one structured-text record per line with fields
// {src_tokens, tgt_tokens, entities:[{start,end,type,nationality,tgt_start,tgt_end}]}.
void save_corpus(const std::string& path, const std::vector<AnnotatedSentence>& sents);
std::vector<AnnotatedSentence> load_corpus(const std::string& path);

// Every token the world can produce, for closed-vocabulary building.
std::vector<TokenList> collect_vocab_corpus(const World& world);

}  // namespace ea
