#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ea {

// Deterministic RNG. The engine is std::mt19937_64 (bit-exact by the
// standard); every distribution is implemented here by hand because the
// std:: distribution algorithms are implementation-defined and corpora,
// checkpoints and reports must replay byte-identically.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed), seed_mix_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Unbiased integer in [lo, hi] via rejection sampling.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo >= hi) return lo;
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<int64_t>(v % span);
  }

  size_t index(size_t n) { return static_cast<size_t>(uniform_int(0, static_cast<int64_t>(n) - 1)); }

  // [0, 1) with 53-bit resolution.
  double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform_real() < p; }

  // Box-Muller; the spare is cached, so call order matters for replay.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1, u2;
    do {
      u1 = uniform_real();
    } while (u1 <= 0.0);
    u2 = uniform_real();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + stddev * r * std::cos(a);
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent child stream; used for per-sentence generation.
  Rng sub(uint64_t stream) {
    uint64_t mixed = splitmix(seed_mix_ ^ (stream + 0x9e3779b97f4a7c15ull));
    return Rng(mixed);
  }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  explicit Rng(uint64_t seed, uint64_t tag) : eng_(splitmix(seed ^ splitmix(tag))), seed_mix_(seed ^ splitmix(tag)) {}

 private:
  std::mt19937_64 eng_;
  uint64_t seed_mix_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ea
