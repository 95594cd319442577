#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ea/rng.hpp"
#include "ea/vocab.hpp"

using namespace ea;

namespace {
const std::vector<Nationality> kNats = {"ALPHA", "BETA", "GAMMA", "OTHER"};
}

TEST_CASE("specials are stable and PAD is id 0") {
  Vocab v = build_vocab({{"a"}}, false, kNats);
  CHECK(Vocab::kPad == 0);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.token(Vocab::kBos) == "<bos>");
  CHECK(v.token(Vocab::kEos) == "<eos>");
  CHECK(v.token(Vocab::kUnk) == "<unk>");
  CHECK(v.token(Vocab::kSep) == "[SEP]");
  CHECK(v.token(Vocab::kSep2) == "[SEP2]");
  CHECK(v.token(v.placeholder(EntityType::PER, 1)) == "PLH_PER_1");
  CHECK(v.token(v.placeholder(EntityType::LOC, 4)) == "PLH_LOC_4");
  CHECK(v.token(v.nat_tag("GAMMA")) == "<GAMMA>");
  CHECK(v.n_special() == 6 + 12 + 4);
}

TEST_CASE("non-special order is frequency desc then lexicographic") {
  Vocab v = build_vocab({{"a", "b"}, {"a"}}, false, kNats);
  int base = v.n_special();
  CHECK(v.token(base) == "a");
  CHECK(v.token(base + 1) == "b");

  // equal frequency -> lexicographic
  Vocab v2 = build_vocab({{"zz", "aa", "mm"}}, false, kNats);
  CHECK(v2.token(v2.n_special()) == "aa");
  CHECK(v2.token(v2.n_special() + 1) == "mm");
  CHECK(v2.token(v2.n_special() + 2) == "zz");
}

TEST_CASE("char mode covers characters") {
  Vocab v = build_vocab({{"ab", "bc"}}, true, kNats);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK(v.contains("c"));
  CHECK_FALSE(v.contains("ab"));
  // 'b' occurs twice -> first non-special
  CHECK(v.token(v.n_special()) == "b");
}

TEST_CASE("unknown token encodes to UNK; decode strips PAD") {
  Vocab v = build_vocab({{"x", "y"}}, false, kNats);
  CHECK(v.id("nope") == Vocab::kUnk);
  auto ids = v.encode({"x", "nope", "y"});
  CHECK(ids[1] == Vocab::kUnk);
  TokenList out = v.decode({Vocab::kPad, v.id("x"), Vocab::kPad});
  CHECK(out == TokenList{"x"});
  CHECK(v.encode({}).empty());
  CHECK(v.decode({}).empty());
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS(build_vocab({}, false, kNats));
}

TEST_CASE("encode/decode are inverse on random in-vocab corpora") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TokenList> corpus;
    int n_types = 2 + static_cast<int>(rng.index(20));
    std::vector<std::string> types;
    for (int i = 0; i < n_types; ++i) {
      std::string t;
      int len = 1 + static_cast<int>(rng.index(5));
      for (int k = 0; k < len; ++k) t.push_back(static_cast<char>('a' + rng.index(26)));
      types.push_back(t);
    }
    for (int s = 0; s < 5; ++s) {
      TokenList sent;
      int len = 1 + static_cast<int>(rng.index(8));
      for (int k = 0; k < len; ++k) sent.push_back(types[rng.index(types.size())]);
      corpus.push_back(sent);
    }
    Vocab v = build_vocab(corpus, false, kNats);
    for (const auto& sent : corpus) {
      auto ids = v.encode(sent);
      CHECK(v.decode(ids) == sent);
      CHECK(v.encode(v.decode(ids)) == ids);
    }
    // decode∘encode on arbitrary valid ids (no PAD) is identity
    std::vector<int> ids;
    for (int k = 0; k < 10; ++k) ids.push_back(1 + static_cast<int>(rng.index(v.size() - 1)));
    CHECK(v.encode(v.decode(ids)) == ids);
  }
}

TEST_CASE("vocab file round trip: one token per line, line number = id") {
  Vocab v = build_vocab({{"tok", "another"}}, false, kNats);
  std::string path = "/tmp/ea_vocab_test.txt";
  v.save(path);
  Vocab w = Vocab::load(path);
  CHECK(w.size() == v.size());
  CHECK(w.n_special() == v.n_special());
  for (int i = 0; i < v.size(); ++i) CHECK(w.token(i) == v.token(i));
}
