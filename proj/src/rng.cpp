#include "dppo/rng.hpp"

#include <cmath>

namespace dppo {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw InputError("next_below: n must be positive");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t threshold = (0ULL - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform01_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01_open();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

int Rng::categorical(const ConstVectorRef& probs) {
  if (probs.size() == 0) throw InputError("categorical: empty probability vector");
  const double u = uniform01();
  double cdf = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

Rng Rng::fork(std::uint64_t salt) const { return Rng(mix_seed(state_, salt)); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1));
  return splitmix64(state);
}

}  // namespace dppo
