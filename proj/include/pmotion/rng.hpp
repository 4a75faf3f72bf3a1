#pragma once

#include <cstdint>
#include <random>

namespace pmotion {

// Deterministic RNG wrapper. All stochastic choices in the pipeline draw from
// one of these, seeded explicitly; `fork` derives independent child streams
// so per-item randomness does not depend on batch iteration order.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double normal() { return normal_(eng_); }
  double uniform() { return uniform_(eng_); }  // [0,1)
  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(eng_);
  }
  double uniform_range(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }
  bool bernoulli(double p) { return uniform() < p; }

  Rng fork(uint64_t stream) {
    // splitmix64 over (state draw, stream id) gives decorrelated children.
    uint64_t x = eng_() + 0x9e3779b97f4a7c15ull * (stream + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return Rng(x);
  }

  uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stateless stream derivation for (seed, step, item) style keys.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0) {
  uint64_t x = base ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xc2b2ae3d27d4eb4full);
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ull;
  x ^= x >> 33;
  return x;
}

}  // namespace pmotion
