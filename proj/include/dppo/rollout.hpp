#ifndef DPPO_ROLLOUT_HPP_
#define DPPO_ROLLOUT_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dppo/env.hpp"
#include "dppo/network.hpp"
#include "dppo/rng.hpp"

namespace dppo {

// Fixed-size rollout of N actors * H steps, stored index-parallel. Actor a's
// steps occupy rows [a*H, (a+1)*H); episodes auto-reset inside the horizon so
// every slot is filled.
struct TrajectoryBatch {
  int num_actors = 0;
  int horizon = 0;

  Matrix observations;           // (N*H, obs_dim)
  IndexVector actions;           // (N*H)
  Vector rewards;                // (N*H)
  std::vector<std::uint8_t> dones;
  Vector old_log_probs;          // log pi_old(a|s), recorded at sampling time
  Vector old_values;             // V_old(s), recorded at sampling time
  Vector bootstrap_values;       // (N) V_old of the state after the last step

  // Filled by gae_annotate.
  Vector advantages;
  Vector value_targets;
  bool annotated = false;

  int size() const { return num_actors * horizon; }
};

// Rows of a TrajectoryBatch gathered for one minibatch.
struct MinibatchData {
  Matrix observations;
  IndexVector actions;
  Vector old_log_probs;
  Vector advantages;
  Vector value_targets;
};

MinibatchData gather(const TrajectoryBatch& batch, std::span<const int> indices);

// Completed-episode returns with a rolling-mean window.
class EpisodeStats {
 public:
  explicit EpisodeStats(int window = 100);

  void add(double episode_return);
  std::optional<double> rolling_mean() const;
  std::int64_t episode_count() const {
    return static_cast<std::int64_t>(returns_.size());
  }
  const std::vector<double>& returns() const { return returns_; }

 private:
  int window_;
  std::vector<double> returns_;
};

// Per-actor persistent state: the environment, the actor's private random
// stream, and the observation the next step will act on. Environments keep
// running across batches; episodes straddle batch boundaries.
struct ActorState {
  std::unique_ptr<Environment> env;
  Rng rng;
  Vector observation;
  double episode_return = 0.0;

  ActorState(std::unique_ptr<Environment> environment, std::uint64_t seed);
};

// Runs every actor for `horizon` steps under the frozen snapshot, one thread
// per actor. Actions are sampled from the snapshot's policy using each
// actor's own stream, so the result is independent of thread scheduling.
// Completed-episode returns are merged into `stats` in (step, actor) order.
TrajectoryBatch collect(const PolicySnapshot& snapshot,
                        std::vector<ActorState>& actors, int horizon,
                        EpisodeStats& stats);

// Generalized advantage estimation over each actor's contiguous stream:
//   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// seeded past the horizon with the recorded bootstrap value. Value targets
// are A_t + V(s_t). A done flag cuts both bootstrapping and eligibility.
void gae_annotate(TrajectoryBatch& batch, double lambda, double gamma);

}  // namespace dppo

#endif  // DPPO_ROLLOUT_HPP_
