#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ea/types.hpp"
#include "ea/util.hpp"

namespace ea {

// Token <-> id mapping with a fixed special block at the front:
//   0:PAD 1:BOS 2:EOS 3:UNK 4:SEP 5:SEP2, then PLH_{PER,ORG,LOC}_{1..4},
//   then one <NAT> tag per nationality. Non-special ids follow, ordered by
//   (frequency desc, token lexicographic).
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSep = 4;
  static constexpr int kSep2 = 5;
  static constexpr int kMaxPlaceholders = 4;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int n_special() const { return n_special_; }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

  const std::string& token(int id) const {
    require(id >= 0 && id < size(), "vocab: id out of range");
    return id_to_token_[id];
  }

  // PLH_<TYPE>_<k>, k in 1..4.
  int placeholder(EntityType t, int k) const;
  bool is_placeholder(int id) const { return id >= 6 && id < 6 + 12; }

  int nat_tag(const Nationality& nat) const;

  std::vector<int> encode(const TokenList& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  // Drops PAD.
  TokenList decode(const std::vector<int>& ids) const {
    TokenList out;
    out.reserve(ids.size());
    for (int i : ids) {
      if (i == kPad) continue;
      out.push_back(token(i));
    }
    return out;
  }

  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  friend Vocab build_vocab(const std::vector<TokenList>& corpus, bool char_mode,
                           const std::vector<Nationality>& nationalities);

 private:
  void push(const std::string& token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int n_special_ = 0;
};

// Word mode counts whole tokens; char mode counts single characters of every
// token. Throws on an empty corpus.
Vocab build_vocab(const std::vector<TokenList>& corpus, bool char_mode,
                  const std::vector<Nationality>& nationalities);

}  // namespace ea
