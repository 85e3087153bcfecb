#pragma once

#include <cstdint>
#include <random>

namespace surgpetl {

/// Deterministic RNG stream. A fixed seed reproduces parameter init, data
/// generation and batch order bit-for-bit on one machine; fork() splits off
/// an independent stream without disturbing the parent.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  int64_t uniform_int(int64_t lo, int64_t hi_inclusive) {
    return std::uniform_int_distribution<int64_t>(lo, hi_inclusive)(engine_);
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

  Rng fork() { return Rng(engine_()); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace surgpetl
