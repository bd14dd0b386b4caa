#ifndef DPPO_FINITE_MDP_HPP_
#define DPPO_FINITE_MDP_HPP_

#include <cstdint>
#include <memory>
#include <vector>

#include "dppo/env.hpp"
#include "dppo/types.hpp"

namespace dppo {

// Explicit finite MDP: transition probabilities, reward table, initial state
// distribution and an episode horizon. Small enough that every quantity of
// interest can be computed exactly by enumeration.
struct FiniteMdpSpec {
  int state_count = 0;
  int action_count = 0;
  std::vector<Matrix> transition;  // [action](state, next_state)
  Matrix reward;                   // (state, action)
  Vector initial_dist;             // over states
  int horizon = 0;

  // Rows must sum to 1 within 1e-12, probabilities must lie in [0, 1].
  void validate() const;
};

// Exact finite-horizon value tables under a fixed policy.
struct FiniteMdpTables {
  Matrix q_values;   // (state, action)
  Vector v_values;   // (state)
  Matrix advantage;  // q - v
};

// Backward dynamic programming over spec.horizon steps.
// policy is (state, action) with rows summing to 1.
FiniteMdpTables enumerate_tables(const FiniteMdpSpec& mdp,
                                 const ConstMatrixRef& policy,
                                 double discount);

// Time-averaged state occupancy P(s) = (1/H) * sum_{t=1..H} Pr(S_t = s),
// with S_1 drawn from the initial distribution. Sums to 1.
Vector exact_visitation(const FiniteMdpSpec& mdp, const ConstMatrixRef& policy,
                        int horizon);

// Seeded random MDP: Dirichlet(1) transition rows and initial distribution,
// rewards uniform in [-1, 1].
FiniteMdpSpec make_random_mdp(int states, int actions, std::uint64_t seed,
                              int horizon);

// Deterministic chain with `length` states. Start at state 0; action 1 moves
// right, action 0 moves left (floored at 0). Entering the last state pays
// reward 1 and ends the episode. Observations are one-hot.
class ChainEnv final : public Environment {
 public:
  explicit ChainEnv(int length);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(int action) override;

 private:
  Vector one_hot(int state) const;

  EnvSpec spec_;
  int length_;
  int state_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// Environment view of a FiniteMdpSpec: one-hot observations, stochastic
// transitions sampled from the spec, episode ends at spec.horizon.
class FiniteMdpEnv final : public Environment {
 public:
  explicit FiniteMdpEnv(FiniteMdpSpec mdp);

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(int action) override;

  const FiniteMdpSpec& mdp() const { return mdp_; }

 private:
  Vector one_hot(int state) const;

  FiniteMdpSpec mdp_;
  EnvSpec spec_;
  Rng rng_;
  int state_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace dppo

#endif  // DPPO_FINITE_MDP_HPP_
