#ifndef DPPO_RNG_HPP_
#define DPPO_RNG_HPP_

#include <cstdint>

#include "dppo/types.hpp"

namespace dppo {

// Self-contained splitmix64 generator. The project owns every random stream
// so that runs are reproducible bit-for-bit across runs and platforms;
// std::mt19937 distributions are implementation-defined and would not be.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Unbiased integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on the open interval (0, 1); safe as a log() argument.
  double uniform01_open();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; caches the second draw.
  double normal();

  // Index sampled from a probability vector by CDF scan.
  int categorical(const ConstVectorRef& probs);

  // Independent stream derived from (current state, salt).
  Rng fork(std::uint64_t salt) const;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic seed mixing, used to derive per-actor / per-purpose streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace dppo

#endif  // DPPO_RNG_HPP_
