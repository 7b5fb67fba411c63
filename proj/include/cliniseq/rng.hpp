#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace cliniseq {

// Seeded random stream. The engine is std::mt19937_64; the mappings from raw
// 64-bit words to doubles, bounded integers, normals and gammas are spelled out
// here rather than taken from <random> distributions, whose algorithms are
// implementation-defined. Identical seeds therefore give identical streams on
// every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  double normal();

  double gamma(double shape);

  std::vector<double> dirichlet(std::span<const double> alpha);

  // Number of failures before the first success, success probability p.
  std::uint64_t geometric(double p);

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Sub-seed keyed by a name (FNV-1a of the name mixed with the seed).
std::uint64_t mix_seed(std::uint64_t seed, std::string_view name);

}  // namespace cliniseq
