#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace newsflow {

/// Seeded generator with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions are implemented here instead of using the
/// <random> distribution classes, whose algorithms vary between standard
/// libraries:
///   uniform()        (next() >> 11) * 2^-53, in [0, 1)
///   uniform_index(n) rejection sampling on the top bits, unbiased
///   normal()         Marsaglia polar method
///   gamma(a)         Marsaglia-Tsang, with the a < 1 boost
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::size_t uniform_index(std::size_t n);
  double normal();
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);
  std::vector<double> symmetric_dirichlet(double alpha, std::size_t k);
  /// Index drawn proportionally to nonnegative `weights`.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Derives an independent stream seed (splitmix64 finalizer over base+stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace newsflow
