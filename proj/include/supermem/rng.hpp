#pragma once

#include <cstdint>
#include <random>

namespace supermem {

// splitmix64, used both as a seed scrambler and as the fixed, documented
// replica-seed derivation: replica i of a run with base seed s is driven by
// mix64(s ^ golden * (i + 1)).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t replica_seed(std::uint64_t base_seed, std::uint64_t replica) {
  return mix64(base_seed ^ (0x9e3779b97f4a7c15ULL * (replica + 1)));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

  double uniform() { return uni_(gen_); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
  }

  double exponential(double rate) {
    return std::exponential_distribution<double>(rate)(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace supermem
