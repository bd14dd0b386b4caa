#ifndef DPPO_ENV_HPP_
#define DPPO_ENV_HPP_

#include <cstdint>
#include <memory>
#include <string>

#include "dppo/rng.hpp"
#include "dppo/types.hpp"

namespace dppo {

// Static description of an environment's interface.
struct EnvSpec {
  int observation_dim = 0;
  int action_count = 0;   // discrete actions
  int horizon_cap = 0;    // hard per-episode step limit

  void validate() const;
};

// One environment interaction.
struct Transition {
  Vector observation;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  Vector next_observation;
};

// Environments are single-threaded state machines: reset(seed) starts an
// episode deterministically, step() advances it. Instances are not shareable
// across threads; run one per actor.
class Environment {
 public:
  struct StepResult {
    Vector observation;
    double reward = 0.0;
    bool done = false;
  };

  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  // Begins a new episode. Identical seeds give identical episodes.
  virtual Vector reset(std::uint64_t seed) = 0;

  // Throws UsageError if the episode already ended, InputError on a bad action.
  virtual StepResult step(int action) = 0;
};

// Classic-control cart-pole: 4-dimensional state (position, velocity, angle,
// angular velocity), two actions (push left / push right), Euler integration
// with dt = 0.02. Reward 1 per step; episode ends at |x| > 2.4, |angle| > 12
// degrees, or after 500 steps.
class CartPoleEnv final : public Environment {
 public:
  CartPoleEnv();

  const EnvSpec& spec() const override { return spec_; }
  Vector reset(std::uint64_t seed) override;
  StepResult step(int action) override;

  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kPoleHalfLength = 0.5;
  static constexpr double kForceMagnitude = 10.0;
  static constexpr double kTimeStep = 0.02;
  static constexpr double kPositionLimit = 2.4;
  static constexpr int kHorizonCap = 500;

 private:
  EnvSpec spec_;
  Eigen::Vector4d state_;
  Rng rng_;
  int steps_ = 0;
  bool done_ = true;
};

// Parses an environment id and constructs the environment. Accepted forms:
//   cartpole
//   chain:<n>
//   randmdp:<states>x<actions>:<seed>
std::unique_ptr<Environment> make_environment(const std::string& env_id);

}  // namespace dppo

#endif  // DPPO_ENV_HPP_
