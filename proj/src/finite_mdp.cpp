#include "dppo/finite_mdp.hpp"

#include <cmath>

namespace dppo {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_probability_row(const ConstVectorRef& row, const std::string& what) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const double p = row[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw InputError(what + ": probability out of [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance)
    throw InputError(what + ": probabilities sum to " + std::to_string(sum) +
                     ", expected 1");
}

void check_policy(const ConstMatrixRef& policy, int states, int actions) {
  if (policy.rows() != states || policy.cols() != actions)
    throw InputError("policy: expected " + std::to_string(states) + "x" +
                     std::to_string(actions) + " table, got " +
                     std::to_string(policy.rows()) + "x" + std::to_string(policy.cols()));
  for (int s = 0; s < states; ++s)
    check_probability_row(policy.row(s).transpose(), "policy row " + std::to_string(s));
}

}  // namespace

void FiniteMdpSpec::validate() const {
  if (state_count < 1) throw InputError("FiniteMdpSpec: state_count must be >= 1");
  if (action_count < 1) throw InputError("FiniteMdpSpec: action_count must be >= 1");
  if (horizon < 1) throw InputError("FiniteMdpSpec: horizon must be >= 1");
  if (static_cast<int>(transition.size()) != action_count)
    throw InputError("FiniteMdpSpec: transition must have one matrix per action");
  for (int a = 0; a < action_count; ++a) {
    if (transition[a].rows() != state_count || transition[a].cols() != state_count)
      throw InputError("FiniteMdpSpec: transition matrix shape mismatch");
    for (int s = 0; s < state_count; ++s)
      check_probability_row(transition[a].row(s).transpose(),
                            "transition[a=" + std::to_string(a) +
                                "][s=" + std::to_string(s) + "]");
  }
  if (reward.rows() != state_count || reward.cols() != action_count)
    throw InputError("FiniteMdpSpec: reward table shape mismatch");
  if (!reward.allFinite()) throw InputError("FiniteMdpSpec: rewards must be finite");
  if (initial_dist.size() != state_count)
    throw InputError("FiniteMdpSpec: initial_dist size mismatch");
  check_probability_row(initial_dist, "initial_dist");
}

FiniteMdpTables enumerate_tables(const FiniteMdpSpec& mdp,
                                 const ConstMatrixRef& policy,
                                 double discount) {
  mdp.validate();
  check_policy(policy, mdp.state_count, mdp.action_count);
  if (discount < 0.0 || discount > 1.0)
    throw InputError("enumerate_tables: discount must lie in [0,1]");

  Vector v = Vector::Zero(mdp.state_count);
  Matrix q = Matrix::Zero(mdp.state_count, mdp.action_count);
  for (int step = 0; step < mdp.horizon; ++step) {
    for (int a = 0; a < mdp.action_count; ++a)
      q.col(a) = mdp.reward.col(a) + discount * (mdp.transition[a] * v);
    v = (policy.array() * q.array()).rowwise().sum();
  }

  FiniteMdpTables tables;
  tables.q_values = q;
  tables.v_values = v;
  tables.advantage = q.colwise() - v;
  return tables;
}

Vector exact_visitation(const FiniteMdpSpec& mdp, const ConstMatrixRef& policy,
                        int horizon) {
  mdp.validate();
  check_policy(policy, mdp.state_count, mdp.action_count);
  if (horizon < 1) throw InputError("exact_visitation: horizon must be >= 1");

  Vector marginal = mdp.initial_dist;
  Vector occupancy = marginal;
  for (int t = 1; t < horizon; ++t) {
    Vector next = Vector::Zero(mdp.state_count);
    for (int a = 0; a < mdp.action_count; ++a)
      next += mdp.transition[a].transpose() * (policy.col(a).array() * marginal.array()).matrix();
    marginal = next;
    occupancy += marginal;
  }
  return occupancy / static_cast<double>(horizon);
}

FiniteMdpSpec make_random_mdp(int states, int actions, std::uint64_t seed,
                              int horizon) {
  if (states < 1 || actions < 1 || horizon < 1)
    throw InputError("make_random_mdp: states, actions and horizon must be positive");
  Rng rng(mix_seed(seed, 0x6D6470ULL));

  const auto dirichlet_row = [&rng](int n) {
    Vector row(n);
    for (int i = 0; i < n; ++i) row[i] = -std::log(rng.uniform01_open());
    return Vector(row / row.sum());
  };

  FiniteMdpSpec mdp;
  mdp.state_count = states;
  mdp.action_count = actions;
  mdp.horizon = horizon;
  mdp.transition.resize(actions, Matrix(states, states));
  for (int a = 0; a < actions; ++a)
    for (int s = 0; s < states; ++s)
      mdp.transition[a].row(s) = dirichlet_row(states).transpose();
  mdp.reward = Matrix(states, actions);
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
  mdp.initial_dist = dirichlet_row(states);
  mdp.validate();
  return mdp;
}

ChainEnv::ChainEnv(int length) : length_(length) {
  if (length < 2) throw InputError("ChainEnv: length must be >= 2");
  spec_ = EnvSpec{length, 2, 4 * length};
  spec_.validate();
}

Vector ChainEnv::one_hot(int state) const {
  Vector v = Vector::Zero(length_);
  v[state] = 1.0;
  return v;
}

Vector ChainEnv::reset(std::uint64_t /*seed*/) {
  state_ = 0;
  steps_ = 0;
  done_ = false;
  return one_hot(state_);
}

Environment::StepResult ChainEnv::step(int action) {
  if (done_) throw UsageError("chain: step() on a finished episode");
  if (action < 0 || action >= 2) throw InputError("chain: action out of range");

  state_ = action == 1 ? state_ + 1 : std::max(0, state_ - 1);
  ++steps_;
  double reward = 0.0;
  if (state_ == length_ - 1) {
    reward = 1.0;
    done_ = true;
  } else if (steps_ >= spec_.horizon_cap) {
    done_ = true;
  }
  return StepResult{one_hot(state_), reward, done_};
}

FiniteMdpEnv::FiniteMdpEnv(FiniteMdpSpec mdp) : mdp_(std::move(mdp)), rng_(0) {
  mdp_.validate();
  spec_ = EnvSpec{mdp_.state_count, mdp_.action_count, mdp_.horizon};
  spec_.validate();
}

Vector FiniteMdpEnv::one_hot(int state) const {
  Vector v = Vector::Zero(mdp_.state_count);
  v[state] = 1.0;
  return v;
}

Vector FiniteMdpEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  state_ = rng_.categorical(mdp_.initial_dist);
  steps_ = 0;
  done_ = false;
  return one_hot(state_);
}

Environment::StepResult FiniteMdpEnv::step(int action) {
  if (done_) throw UsageError("randmdp: step() on a finished episode");
  if (action < 0 || action >= mdp_.action_count)
    throw InputError("randmdp: action out of range");

  const double reward = mdp_.reward(state_, action);
  state_ = rng_.categorical(mdp_.transition[action].row(state_).transpose());
  ++steps_;
  done_ = steps_ >= mdp_.horizon;
  return StepResult{one_hot(state_), reward, done_};
}

}  // namespace dppo
