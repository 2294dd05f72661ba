#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace imbalkit {

/// Independent random streams derived from one root seed. Every consumer of
/// randomness picks its own stream tag so that serial and parallel runs draw
/// identical numbers.
enum class Stream : std::uint64_t {
  split = 1,
  folds,
  smote,
  bootstrap,
  tree_features,
  gbt_rows,
  gbt_columns,
  target_stats,
  mlp_init,
  mlp_batches,
  search,
  shapley,
  lime,
  permutation,
  synthetic,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based child seed: the result depends only on its arguments.
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0);

/// Deterministic generator with platform-independent distributions.
/// The engine is std::mt19937_64 (bit-exact by the standard); the
/// distributions are implemented here because the standard library ones are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(root, stream, index)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Unbiased (rejection sampling).
  std::size_t below(std::size_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 0..n-1 in a seed-determined order.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace imbalkit
