#include "ea/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace ea {

namespace {

using json = nlohmann::ordered_json;

constexpr uint64_t kTagTrainPool = 0x11;
constexpr uint64_t kTagUnseenPool = 0x12;
constexpr uint64_t kTagWordMap = 0x13;
constexpr uint64_t kTagDict = 0x14;
constexpr uint64_t kTagCoverage = 0x15;
constexpr uint64_t kTagSentence = 0x20;

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

uint64_t sentence_stream(uint64_t split, uint64_t index) {
  return (kTagSentence << 56) ^ (split << 48) ^ index;
}

}  // namespace

void WorldConfig::validate() const {
  auto frac = [](double x) { return x >= 0.0 && x <= 1.0; };
  require(content_vocab_size > 0, "config: content_vocab_size must be positive");
  require(sent_len_min >= 1 && sent_len_min <= sent_len_max, "config: bad sentence length range");
  require(ents_min >= 0 && ents_min <= ents_max, "config: bad entities range");
  require(!nationalities.empty(), "config: empty nationality set");
  std::set<Nationality> uniq(nationalities.begin(), nationalities.end());
  require(uniq.size() == nationalities.size(), "config: duplicate nationality ids");
  for (const auto& [t, c] : dict_coverage)
    require(frac(c), std::string("config: coverage out of [0,1] for ") + to_string(t));
  require(frac(multi_candidate_fraction), "config: multi_candidate_fraction out of [0,1]");
  require(frac(context_token_prob), "config: context_token_prob out of [0,1]");
  require(frac(unseen_fraction), "config: unseen_fraction out of [0,1]");
  require(train_size > 0 && val_size >= 0 && test_size >= 0, "config: bad split sizes");
  require(train_pool_per_type > 0 && unseen_pool_per_type > 0, "config: bad pool sizes");
}

std::map<Nationality, TranslitRule> make_translit_rule_table(const std::vector<Nationality>& nationalities) {
  std::set<Nationality> uniq(nationalities.begin(), nationalities.end());
  require(uniq.size() == nationalities.size(), "rule table: nationality ids must be distinct");
  std::map<Nationality, TranslitRule> table;
  for (const auto& nat : nationalities) {
    if (nat == "ALPHA")
      table[nat] = {1, false};
    else if (nat == "BETA")
      table[nat] = {5, false};
    else if (nat == "GAMMA")
      table[nat] = {2, true};
    else if (nat == "OTHER")
      table[nat] = {0, false};
    else
      fail("rule table: unknown nationality " + nat);
  }
  return table;
}

TokenList apply_translit_rule(const TranslitRule& rule, const TokenList& surface) {
  TokenList out;
  out.reserve(surface.size());
  for (const auto& tok : surface) {
    std::string t = tok;
    if (rule.reverse) std::reverse(t.begin(), t.end());
    for (char& c : t) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>('a' + (c - 'a' + rule.rotate) % 26);
    }
    out.push_back(t);
  }
  return out;
}

TokenList apply_translit_rule(const Nationality& nat, const TokenList& surface) {
  auto table = make_translit_rule_table({nat});
  return apply_translit_rule(table.at(nat), surface);
}

std::string context_token(const Nationality& nat) { return "c_" + lower(nat); }
std::string context_token_tgt(const Nationality& nat) { return "d_" + lower(nat); }

EntityPair gen_entity(EntityType type, const Nationality& nat, Rng& rng) {
  static const std::string kAll = "abcdefghijklmnopqrstuvwxyz";
  std::string inventory;
  if (nat == "ALPHA")
    inventory = "abcdefghi";
  else if (nat == "BETA")
    inventory = "jklmnopqr";
  else if (nat == "GAMMA")
    inventory = "stuvwxyzaeiou";
  else
    inventory = kAll;

  EntityPair pair;
  pair.type = type;
  pair.nationality = nat;
  int n_tokens = static_cast<int>(rng.uniform_int(1, 2));
  for (int t = 0; t < n_tokens; ++t) {
    int len = static_cast<int>(rng.uniform_int(3, 6));
    std::string tok;
    for (int i = 0; i < len; ++i) {
      // "mostly" from the inventory; the uniform tail keeps surfaces that
      // only context can disambiguate.
      bool pref = inventory.size() < kAll.size() ? rng.bernoulli(0.75) : false;
      const std::string& src = pref ? inventory : kAll;
      tok.push_back(src[rng.index(src.size())]);
    }
    pair.src_surface.push_back(tok);
  }
  pair.tgt_surface = apply_translit_rule(make_translit_rule_table({nat}).at(nat), pair.src_surface);
  return pair;
}

WordMap::WordMap(const WorldConfig& config) {
  std::vector<int> perm(config.content_vocab_size);
  for (int i = 0; i < config.content_vocab_size; ++i) perm[i] = i;
  Rng rng(config.seed, kTagWordMap);
  rng.shuffle(perm);
  for (int i = 0; i < config.content_vocab_size; ++i)
    map_[content_word(i)] = target_content_word(perm[i]);
  for (const auto& nat : config.nationalities) map_[context_token(nat)] = context_token_tgt(nat);
}

std::string WordMap::content_word(int i) const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%03d", i);
  return buf;
}

std::string WordMap::target_content_word(int i) const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "t%03d", i);
  return buf;
}

std::string WordMap::map(const std::string& src_token) const {
  auto it = map_.find(src_token);
  require(it != map_.end(), "word map: unknown token " + src_token);
  return it->second;
}

std::vector<std::string> pairwise_swap(const std::vector<std::string>& tokens) {
  std::vector<std::string> out = tokens;
  for (size_t i = 0; i + 1 < out.size(); i += 2) std::swap(out[i], out[i + 1]);
  return out;
}

void Dictionary::add(const TokenList& src_surface, DictEntry entry) {
  entries_[join(src_surface)].push_back(std::move(entry));
}

const std::vector<DictEntry>* Dictionary::lookup(const TokenList& surface) const {
  auto it = entries_.find(join(surface));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<DictEntry>* Dictionary::lookup_mut(const TokenList& surface) {
  auto it = entries_.find(join(surface));
  return it == entries_.end() ? nullptr : &it->second;
}

size_t Dictionary::n_entries() const {
  size_t n = 0;
  for (const auto& [k, v] : entries_) n += v.size();
  return n;
}

Dictionary Dictionary::subsample(double fraction, uint64_t seed) const {
  require(fraction >= 0.0 && fraction <= 1.0, "dictionary: bad subsample fraction");
  Dictionary out;
  if (fraction >= 1.0) return *this;
  // Exact per-type counts, deterministic selection order.
  std::map<EntityType, std::vector<const std::pair<const std::string, std::vector<DictEntry>>*>> by_type;
  for (const auto& kv : entries_) by_type[kv.second.front().type].push_back(&kv);
  Rng rng(seed, kTagCoverage);
  for (auto& [type, keys] : by_type) {
    std::vector<size_t> idx(keys.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    size_t keep = static_cast<size_t>(std::llround(fraction * static_cast<double>(keys.size())));
    std::vector<size_t> chosen(idx.begin(), idx.begin() + std::min(keep, idx.size()));
    std::sort(chosen.begin(), chosen.end());
    for (size_t i : chosen) out.entries_[keys[i]->first] = keys[i]->second;
  }
  return out;
}

void Dictionary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "dictionary: cannot write " + path);
  for (const auto& [src, cands] : entries_)
    for (const auto& e : cands)
      os << src << "\t" << join(e.tgt_surface) << "\t" << to_string(e.type) << "\t" << e.nationality
         << "\t" << e.frequency << "\n";
}

Dictionary Dictionary::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "dictionary: cannot read " + path);
  Dictionary d;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    require(fields.size() == 5, "dictionary: bad line: " + line);
    DictEntry e;
    e.tgt_surface = split_ws(fields[1]);
    e.type = entity_type_from(fields[2]);
    e.nationality = fields[3];
    e.frequency = std::stoll(fields[4]);
    d.add(split_ws(fields[0]), std::move(e));
  }
  return d;
}

void Gazetteer::add(const TokenList& surface, EntityType type) {
  types_[join(surface)] = type;
  max_tokens_ = std::max(max_tokens_, static_cast<int>(surface.size()));
}

std::optional<EntityType> Gazetteer::type_of(const std::string& joined) const {
  auto it = types_.find(joined);
  if (it == types_.end()) return std::nullopt;
  return it->second;
}

void Gazetteer::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "gazetteer: cannot write " + path);
  for (const auto& [surface, type] : types_) os << surface << "\n";
}

Gazetteer Gazetteer::load(const std::string& path, const Dictionary* type_source) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "gazetteer: cannot read " + path);
  Gazetteer g;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    TokenList surface = split_ws(line);
    EntityType type = EntityType::PER;
    if (type_source) {
      if (const auto* cands = type_source->lookup(surface)) type = cands->front().type;
    }
    g.add(surface, type);
  }
  return g;
}

namespace {

std::vector<EntityPair> gen_pool(const WorldConfig& cfg, int per_type, uint64_t tag,
                                 std::set<std::string>& used_surfaces) {
  Rng rng(cfg.seed, tag);
  std::vector<EntityPair> pool;
  for (EntityType type : kEntityTypes) {
    for (int i = 0; i < per_type; ++i) {
      const Nationality& nat = cfg.nationalities[i % cfg.nationalities.size()];
      for (;;) {
        EntityPair pair = gen_entity(type, nat, rng);
        std::string key = join(pair.src_surface);
        if (used_surfaces.insert(key).second) {
          pool.push_back(std::move(pair));
          break;
        }
      }
    }
  }
  return pool;
}

struct SentenceSpec {
  const std::vector<EntityPair>* pool = nullptr;
  int min_ents = 0;
};

AnnotatedSentence gen_sentence(const WorldConfig& cfg, const WordMap& wmap, const Dictionary& dict,
                               const SentenceSpec& spec, Rng& rng) {
  AnnotatedSentence sent;

  int len = static_cast<int>(rng.uniform_int(cfg.sent_len_min, cfg.sent_len_max));
  TokenList content;
  content.reserve(len + 4);
  for (int i = 0; i < len; ++i)
    content.push_back(wmap.content_word(static_cast<int>(rng.index(cfg.content_vocab_size))));

  int max_ents = spec.pool && !spec.pool->empty() ? cfg.ents_max : 0;
  int min_ents = std::min(spec.min_ents, max_ents);
  int n_ents = static_cast<int>(rng.uniform_int(min_ents, max_ents));

  std::vector<const EntityPair*> picked;
  std::set<size_t> picked_idx;
  while (static_cast<int>(picked.size()) < n_ents) {
    size_t i = rng.index(spec.pool->size());
    if (picked_idx.insert(i).second) picked.push_back(&(*spec.pool)[i]);
  }

  for (const EntityPair* e : picked) {
    if (rng.bernoulli(cfg.context_token_prob)) {
      size_t pos = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(content.size())));
      content.insert(content.begin() + pos, context_token(e->nationality));
    }
  }

  int m = static_cast<int>(content.size());
  std::set<int> gaps;
  while (static_cast<int>(gaps.size()) < n_ents) gaps.insert(static_cast<int>(rng.uniform_int(0, m)));
  std::vector<int> gap_list(gaps.begin(), gaps.end());

  TokenList tgt_content;
  tgt_content.reserve(content.size());
  for (const auto& tok : content) tgt_content.push_back(wmap.map(tok));
  tgt_content = pairwise_swap(tgt_content);

  // Reference renders a 2-variant dictionary entry with either variant.
  std::vector<TokenList> tgt_surfaces;
  for (const EntityPair* e : picked) {
    const auto* cands = dict.lookup(e->src_surface);
    if (cands && cands->size() > 1) {
      size_t v = rng.index(cands->size());
      tgt_surfaces.push_back((*cands)[v].tgt_surface);
    } else {
      tgt_surfaces.push_back(e->tgt_surface);
    }
  }

  sent.src_tokens = content;
  sent.tgt_tokens = tgt_content;
  int src_shift = 0, tgt_shift = 0;
  for (int k = 0; k < n_ents; ++k) {
    const EntityPair* e = picked[k];
    int gap = gap_list[k];
    EntitySpan span;
    span.type = e->type;
    span.nationality = e->nationality;
    span.src_surface = e->src_surface;
    span.gold_tgt_surface = tgt_surfaces[k];
    span.start = gap + src_shift;
    span.end = span.start + static_cast<int>(e->src_surface.size());
    span.tgt_start = gap + tgt_shift;
    span.tgt_end = span.tgt_start + static_cast<int>(tgt_surfaces[k].size());
    sent.src_tokens.insert(sent.src_tokens.begin() + span.start, e->src_surface.begin(),
                           e->src_surface.end());
    sent.tgt_tokens.insert(sent.tgt_tokens.begin() + span.tgt_start, tgt_surfaces[k].begin(),
                           tgt_surfaces[k].end());
    src_shift += static_cast<int>(e->src_surface.size());
    tgt_shift += static_cast<int>(tgt_surfaces[k].size());
    sent.entities.push_back(std::move(span));
  }
  return sent;
}

}  // namespace

World gen_corpus(const WorldConfig& config) {
  config.validate();
  make_translit_rule_table(config.nationalities);

  World world;
  world.config = config;

  std::set<std::string> used_surfaces;
  world.train_pool = gen_pool(config, config.train_pool_per_type, kTagTrainPool, used_surfaces);
  world.unseen_pool = gen_pool(config, config.unseen_pool_per_type, kTagUnseenPool, used_surfaces);

  // Variant structure decided once on the full dictionary; the training
  // dictionary copies a per-type coverage subset of the train pool.
  Rng dict_rng(config.seed, kTagDict);
  auto add_entries = [&](const EntityPair& e) {
    DictEntry primary{e.tgt_surface, e.type, e.nationality, 0};
    world.dict_full.add(e.src_surface, primary);
    if (dict_rng.bernoulli(config.multi_candidate_fraction)) {
      DictEntry dup = primary;
      dup.tgt_surface.back().push_back(dup.tgt_surface.back().back());
      world.dict_full.add(e.src_surface, dup);
    }
  };
  for (const auto& e : world.train_pool) add_entries(e);
  for (const auto& e : world.unseen_pool) add_entries(e);

  Rng cov_rng(config.seed, kTagCoverage);
  for (EntityType type : kEntityTypes) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < world.train_pool.size(); ++i)
      if (world.train_pool[i].type == type) idx.push_back(i);
    cov_rng.shuffle(idx);
    double coverage = 0.0;
    if (auto it = config.dict_coverage.find(type); it != config.dict_coverage.end())
      coverage = it->second;
    size_t keep = static_cast<size_t>(std::llround(coverage * static_cast<double>(idx.size())));
    std::vector<size_t> chosen(idx.begin(), idx.begin() + std::min(keep, idx.size()));
    std::sort(chosen.begin(), chosen.end());
    for (size_t i : chosen) {
      const auto& e = world.train_pool[i];
      for (const auto& entry : *world.dict_full.lookup(e.src_surface)) world.dict.add(e.src_surface, entry);
    }
  }

  for (const auto& e : world.train_pool) world.gazetteer.add(e.src_surface, e.type);
  for (const auto& e : world.unseen_pool) world.gazetteer.add(e.src_surface, e.type);

  WordMap wmap(config);

  world.train.reserve(config.train_size);
  for (int i = 0; i < config.train_size; ++i) {
    Rng srng(config.seed, sentence_stream(1, i));
    world.train.push_back(gen_sentence(config, wmap, world.dict, {&world.train_pool, config.ents_min}, srng));
  }
  world.val.reserve(config.val_size);
  for (int i = 0; i < config.val_size; ++i) {
    Rng srng(config.seed, sentence_stream(2, i));
    world.val.push_back(gen_sentence(config, wmap, world.dict, {&world.train_pool, config.ents_min}, srng));
  }
  world.test.reserve(config.test_size);
  world.test_unseen.reserve(config.test_size);
  for (int i = 0; i < config.test_size; ++i) {
    Rng srng(config.seed, sentence_stream(3, i));
    bool unseen = srng.bernoulli(config.unseen_fraction);
    SentenceSpec spec = unseen ? SentenceSpec{&world.unseen_pool, std::max(1, config.ents_min)}
                               : SentenceSpec{&world.train_pool, config.ents_min};
    world.test.push_back(gen_sentence(config, wmap, world.dict, spec, srng));
    world.test_unseen.push_back(unseen ? 1 : 0);
  }

  // Training-corpus frequencies, per dictionary variant.
  std::map<std::string, size_t> pool_index;
  for (size_t i = 0; i < world.train_pool.size(); ++i) pool_index[join(world.train_pool[i].src_surface)] = i;
  for (const auto& sent : world.train) {
    for (const auto& span : sent.entities) {
      auto it = pool_index.find(join(span.src_surface));
      if (it != pool_index.end()) world.train_pool[it->second].frequency++;
      for (Dictionary* d : {&world.dict, &world.dict_full}) {
        if (auto* cands = d->lookup_mut(span.src_surface)) {
          for (auto& c : *cands) {
            if (c.tgt_surface == span.gold_tgt_surface) {
              c.frequency++;
              break;
            }
          }
        }
      }
    }
  }
  return world;
}

void save_corpus(const std::string& path, const std::vector<AnnotatedSentence>& sents) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "corpus: cannot write " + path);
  for (const auto& s : sents) {
    json rec;
    rec["src_tokens"] = s.src_tokens;
    rec["tgt_tokens"] = s.tgt_tokens;
    rec["entities"] = json::array();
    for (const auto& e : s.entities) {
      json je;
      je["start"] = e.start;
      je["end"] = e.end;
      je["type"] = to_string(e.type);
      je["nationality"] = e.nationality;
      je["tgt_start"] = e.tgt_start;
      je["tgt_end"] = e.tgt_end;
      rec["entities"].push_back(std::move(je));
    }
    os << rec.dump() << "\n";
  }
}

std::vector<AnnotatedSentence> load_corpus(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "corpus: cannot read " + path);
  std::vector<AnnotatedSentence> sents;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    AnnotatedSentence s;
    s.src_tokens = rec.at("src_tokens").get<TokenList>();
    s.tgt_tokens = rec.at("tgt_tokens").get<TokenList>();
    for (const auto& je : rec.at("entities")) {
      EntitySpan e;
      e.start = je.at("start").get<int>();
      e.end = je.at("end").get<int>();
      e.type = entity_type_from(je.at("type").get<std::string>());
      e.nationality = je.at("nationality").get<std::string>();
      e.tgt_start = je.at("tgt_start").get<int>();
      e.tgt_end = je.at("tgt_end").get<int>();
      require(e.start >= 0 && e.start < e.end && e.end <= static_cast<int>(s.src_tokens.size()),
              "corpus: entity span out of bounds in " + path);
      require(e.tgt_start >= 0 && e.tgt_start < e.tgt_end &&
                  e.tgt_end <= static_cast<int>(s.tgt_tokens.size()),
              "corpus: entity tgt span out of bounds in " + path);
      e.src_surface.assign(s.src_tokens.begin() + e.start, s.src_tokens.begin() + e.end);
      e.gold_tgt_surface.assign(s.tgt_tokens.begin() + e.tgt_start, s.tgt_tokens.begin() + e.tgt_end);
      s.entities.push_back(std::move(e));
    }
    sents.push_back(std::move(s));
  }
  return sents;
}

std::vector<TokenList> collect_vocab_corpus(const World& world) {
  std::vector<TokenList> out;
  auto add_split = [&](const std::vector<AnnotatedSentence>& split) {
    for (const auto& s : split) {
      out.push_back(s.src_tokens);
      out.push_back(s.tgt_tokens);
    }
  };
  add_split(world.train);
  add_split(world.val);
  add_split(world.test);
  for (const auto& [src, cands] : world.dict_full.all()) {
    out.push_back(split_ws(src));
    for (const auto& c : cands) out.push_back(c.tgt_surface);
  }
  TokenList ctx;
  for (const auto& nat : world.config.nationalities) {
    ctx.push_back(context_token(nat));
    ctx.push_back(context_token_tgt(nat));
  }
  out.push_back(ctx);
  return out;
}

}  // namespace ea
