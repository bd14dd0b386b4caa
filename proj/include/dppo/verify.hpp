#ifndef DPPO_VERIFY_HPP_
#define DPPO_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dppo/types.hpp"
#include "dppo/variance_lab.hpp"

namespace dppo {

// Result of one verification sweep.
struct SweepResult {
  std::string name;
  int instances = 0;
  int failures = 0;
  double worst = 0.0;  // largest observed error (sweep-specific meaning)
  std::string detail;

  bool passed() const { return failures == 0; }
};

// Random support distributions (Dirichlet probabilities, uniform surrogate
// values in [-5, 5], n up to max_support) checked against verify_identities.
SweepResult sweep_variance_identities(int instances, std::uint64_t seed,
                                      double tolerance, int max_support = 64);

// Support distributions grounded in random finite MDPs: exact visitation
// times the old policy for probabilities, importance ratio times the exact
// advantage for values.
SweepResult sweep_mdp_identities(int mdp_count, std::uint64_t seed,
                                 double tolerance, int max_states = 8,
                                 int max_actions = 4);

// O(n) phi computation against the O(n^2) double loop, vector-relative.
SweepResult sweep_phi_bruteforce(const std::vector<int>& sizes, std::uint64_t seed,
                                 double tolerance);

// Per-partition dropped fraction within [r - 1/|p|, r + 2/|p|] plus order
// consistency, over random tie-free phi vectors.
SweepResult sweep_dropout_fraction(const std::vector<double>& ratios, int instances,
                                   int n, std::uint64_t seed);

// Analytic combined-loss gradients against central finite differences.
SweepResult sweep_gradient_check(int instances, std::uint64_t seed,
                                 double tolerance, double step = 1e-5);

// Builds one MDP-grounded support distribution (exposed for tests).
SupportDistribution mdp_support_distribution(int states, int actions,
                                             std::uint64_t seed, int horizon,
                                             double discount);

// Finite-difference gradient of the combined loss on a random instance;
// returns the largest per-entry error relative to the gradient scale.
double gradient_check_instance(std::uint64_t seed, double step);

}  // namespace dppo

#endif  // DPPO_VERIFY_HPP_
