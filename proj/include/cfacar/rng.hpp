#pragma once

#include "cfacar/types.hpp"

#include <cstdint>
#include <random>

namespace cfacar {

// Deterministic per-chain random stream. Chains, replicates and folds derive
// independent substreams from one master seed so runs are reproducible
// regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  // Independent stream keyed by (seed, id).
  Rng substream(std::uint64_t id) const {
    return Rng(mix(seed_ ^ (0x9e3779b97f4a7c15ULL + id * 0xbf58476d1ce4e5b9ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  double uniform() { return unif_(gen_); }

  double normal() { return norm_(gen_); }

  // Gamma(shape, scale)
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> d(shape, scale);
    return d(gen_);
  }

  // Inverse gamma with shape a and rate b: mean b/(a-1) for a > 1.
  double inv_gamma(double shape, double rate) {
    return rate / gamma(shape, 1.0);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, bound)
  std::uint64_t integer(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    return d(gen_);
  }

  Vectord normal_vector(Index n) {
    Vectord z(n);
    for (Index i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  template <class Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = normal();
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  // splitmix64 finalizer; spreads nearby seeds apart
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace cfacar
