#include "ea/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace ea {

void Vocab::push(const std::string& token) {
  require(!token_to_id_.count(token), "vocab: duplicate token " + token);
  token_to_id_[token] = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
}

int Vocab::placeholder(EntityType t, int k) const {
  require(k >= 1 && k <= kMaxPlaceholders, "vocab: placeholder index out of range");
  std::string tok = std::string("PLH_") + to_string(t) + "_" + std::to_string(k);
  auto it = token_to_id_.find(tok);
  require(it != token_to_id_.end(), "vocab: missing placeholder " + tok);
  return it->second;
}

int Vocab::nat_tag(const Nationality& nat) const {
  auto it = token_to_id_.find("<" + nat + ">");
  require(it != token_to_id_.end(), "vocab: missing nationality tag <" + nat + ">");
  return it->second;
}

Vocab build_vocab(const std::vector<TokenList>& corpus, bool char_mode,
                  const std::vector<Nationality>& nationalities) {
  require(!corpus.empty(), "build_vocab: empty corpus");

  Vocab v;
  v.push("<pad>");
  v.push("<bos>");
  v.push("<eos>");
  v.push("<unk>");
  v.push("[SEP]");
  v.push("[SEP2]");
  for (EntityType t : {EntityType::PER, EntityType::ORG, EntityType::LOC})
    for (int k = 1; k <= Vocab::kMaxPlaceholders; ++k)
      v.push(std::string("PLH_") + to_string(t) + "_" + std::to_string(k));
  for (const auto& nat : nationalities) v.push("<" + nat + ">");
  v.n_special_ = v.size();

  // std::map iterates lexicographically; the stable sort by frequency keeps
  // that order within equal counts.
  std::map<std::string, int64_t> freq;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) {
      if (char_mode) {
        for (char c : tok) freq[std::string(1, c)]++;
      } else {
        freq[tok]++;
      }
    }
  }

  std::vector<std::pair<std::string, int64_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, f] : items) {
    (void)f;
    if (!v.token_to_id_.count(tok)) v.push(tok);
  }
  return v;
}

// One token per line, line number = id. The special block is recovered on
// load from its documented layout: 6 fixed tokens, 12 placeholders, then the
// run of <NAT> tags.
void Vocab::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "vocab: cannot write " + path);
  for (const auto& t : id_to_token_) os << t << "\n";
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "vocab: cannot read " + path);
  Vocab v;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.push(line);
  }
  int fixed = 6 + 12;
  require(v.size() >= fixed, "vocab: truncated file " + path);
  int n = fixed;
  while (n < v.size() && v.id_to_token_[n].size() >= 3 && v.id_to_token_[n].front() == '<' &&
         v.id_to_token_[n].back() == '>')
    ++n;
  v.n_special_ = n;
  return v;
}

}  // namespace ea
