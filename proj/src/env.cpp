#include "dppo/env.hpp"

#include <cmath>
#include <charconv>

#include "dppo/finite_mdp.hpp"

namespace dppo {

void EnvSpec::validate() const {
  if (observation_dim < 1) throw InputError("EnvSpec: observation_dim must be >= 1");
  if (action_count < 2) throw InputError("EnvSpec: action_count must be >= 2");
  if (horizon_cap < 1) throw InputError("EnvSpec: horizon_cap must be >= 1");
}

CartPoleEnv::CartPoleEnv() : rng_(0) {
  spec_ = EnvSpec{4, 2, kHorizonCap};
  spec_.validate();
  state_.setZero();
}

Vector CartPoleEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  for (int i = 0; i < 4; ++i) state_[i] = rng_.uniform(-0.05, 0.05);
  steps_ = 0;
  done_ = false;
  return state_;
}

Environment::StepResult CartPoleEnv::step(int action) {
  if (done_) throw UsageError("cartpole: step() on a finished episode");
  if (action < 0 || action >= spec_.action_count)
    throw InputError("cartpole: action out of range");

  const double force = action == 1 ? kForceMagnitude : -kForceMagnitude;
  const double total_mass = kCartMass + kPoleMass;
  const double pole_mass_length = kPoleMass * kPoleHalfLength;

  double x = state_[0];
  double x_dot = state_[1];
  double theta = state_[2];
  double theta_dot = state_[3];

  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);
  const double temp =
      (force + pole_mass_length * theta_dot * theta_dot * sin_theta) / total_mass;
  const double theta_acc =
      (kGravity * sin_theta - cos_theta * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_theta * cos_theta / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass;

  // Semi-explicit Euler: positions advance on the old velocities.
  x += kTimeStep * x_dot;
  x_dot += kTimeStep * x_acc;
  theta += kTimeStep * theta_dot;
  theta_dot += kTimeStep * theta_acc;
  state_ << x, x_dot, theta, theta_dot;

  ++steps_;
  const double angle_limit = 12.0 * 2.0 * M_PI / 360.0;
  const bool fell = std::abs(x) > kPositionLimit || std::abs(theta) > angle_limit;
  done_ = fell || steps_ >= kHorizonCap;

  return StepResult{state_, 1.0, done_};
}

namespace {

int parse_positive_int(const std::string& text, const std::string& what) {
  int value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size() || value < 1)
    throw ConfigError("environment id: " + what + " must be a positive integer, got '" +
                      text + "'");
  return value;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw ConfigError("environment id: " + what + " must be an unsigned integer, got '" +
                      text + "'");
  return value;
}

constexpr int kRandomMdpDefaultHorizon = 64;

}  // namespace

std::unique_ptr<Environment> make_environment(const std::string& env_id) {
  if (env_id == "cartpole") return std::make_unique<CartPoleEnv>();

  if (env_id.rfind("chain:", 0) == 0) {
    const int length = parse_positive_int(env_id.substr(6), "chain length");
    if (length < 2) throw ConfigError("environment id: chain length must be >= 2");
    return std::make_unique<ChainEnv>(length);
  }

  if (env_id.rfind("randmdp:", 0) == 0) {
    // randmdp:<states>x<actions>:<seed>
    const std::string rest = env_id.substr(8);
    const auto x_pos = rest.find('x');
    const auto colon_pos = rest.find(':');
    if (x_pos == std::string::npos || colon_pos == std::string::npos || colon_pos < x_pos)
      throw ConfigError("environment id: expected randmdp:<states>x<actions>:<seed>, got '" +
                        env_id + "'");
    const int states = parse_positive_int(rest.substr(0, x_pos), "state count");
    const int actions =
        parse_positive_int(rest.substr(x_pos + 1, colon_pos - x_pos - 1), "action count");
    const std::uint64_t seed = parse_u64(rest.substr(colon_pos + 1), "seed");
    if (actions < 2) throw ConfigError("environment id: randmdp needs >= 2 actions");
    return std::make_unique<FiniteMdpEnv>(
        make_random_mdp(states, actions, seed, kRandomMdpDefaultHorizon));
  }

  throw ConfigError("unknown environment id '" + env_id +
                    "' (expected cartpole, chain:<n> or randmdp:<s>x<a>:<seed>)");
}

}  // namespace dppo
