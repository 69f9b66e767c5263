#pragma once

#include <cstdint>
#include <random>

#include "tbvar/types.hpp"

namespace tbvar {

/// Derives an independent stream seed from (seed, stream) with the SplitMix64
/// finalizer. Replication i of an experiment seeded with s uses
/// split_seed(s, i); nested streams apply it again.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// Seedable 64-bit Mersenne Twister with distribution transforms from
/// Boost.Random, whose algorithms are fixed across platforms (unlike the
/// implementation-defined <random> distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  double chi_squared(double df);
  double lognormal(double mu, double sigma);
  bool bernoulli(double p);
  std::uint64_t index(std::uint64_t n);  // uniform on {0, ..., n-1}
  Vector normal_vector(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tbvar
