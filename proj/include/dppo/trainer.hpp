#ifndef DPPO_TRAINER_HPP_
#define DPPO_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dppo/adam.hpp"
#include "dppo/dropout.hpp"
#include "dppo/metrics.hpp"
#include "dppo/network.hpp"
#include "dppo/rollout.hpp"

namespace dppo {

enum class LrDecay { kLinear, kConstant };

// Full training configuration. Defaults are the published PPO/D-PPO
// hyperparameters; see parse_config for the file keys.
struct TrainConfig {
  std::string env_id;
  int actors = 8;
  int horizon = 256;
  double lr0 = 2.5e-4;
  LrDecay lr_decay = LrDecay::kLinear;
  std::int64_t total_steps = 10'000'000;
  int epochs = 4;
  int minibatch_size = 512;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double clip_epsilon = 0.1;
  double c1 = 1.0;
  double c2 = 0.01;
  DropoutConfig dropout;
  std::uint64_t seed = 0;
  bool advantage_normalization = false;

  std::int64_t batch_size() const {
    return static_cast<std::int64_t>(actors) * horizon;
  }
  void validate() const;  // throws ConfigError
};

// lr0 * (1 - step / total_steps), floored at zero.
double lr_schedule(std::int64_t step, std::int64_t total_steps, double lr0);

// One PPO/D-PPO update over an annotated batch: per epoch, shuffle the live
// set, sweep it in batch_size/minibatch_size near-equal minibatches (one Adam
// step each; the count holds as dropout shrinks the live set), then recompute
// the surrogate values with the current parameters and apply the configured
// dropout to shrink the live set. With dropout off the live set never changes
// and this is plain PPO.
//
// Returns one record per executed epoch. The surrogate-variance metric in
// each record is the population variance of the surrogate over the FULL batch
// at that epoch's start, before its updates.
std::vector<UpdateRecord> run_update(ParameterVector& params, AdamState& adam,
                                     const TrajectoryBatch& batch,
                                     const TrainConfig& config, int update_index,
                                     std::int64_t steps_before, double lr,
                                     Rng& shuffle_rng, const EpisodeStats& stats);

struct TrainResult {
  std::filesystem::path run_dir;
  int updates = 0;
  std::int64_t episodes = 0;
  double best_rolling_return = 0.0;
  double final_rolling_return = 0.0;
};

// Full training loop: collect -> GAE -> update until total_steps are
// consumed. Writes config.resolved, metrics.csv, checkpoints/ and
// final_report.txt into out_dir. Deterministic in (config, seed).
TrainResult train(const TrainConfig& config, const std::filesystem::path& out_dir);

struct EvaluationResult {
  Vector episode_returns;
  double mean_return = 0.0;
};

// Runs `episodes` episodes with argmax action selection (or sampling when
// stochastic = true) and reports undiscounted returns.
EvaluationResult evaluate(const ParameterVector& params, const std::string& env_id,
                          int episodes, std::uint64_t seed, bool stochastic = false);
EvaluationResult evaluate(const std::filesystem::path& checkpoint_path,
                          const std::string& env_id, int episodes,
                          std::uint64_t seed, bool stochastic = false);

// Architecture used for an environment: per-head [64, 64] tanh trunks.
NetworkArchitecture default_architecture(int observation_dim, int action_count);

}  // namespace dppo

#endif  // DPPO_TRAINER_HPP_
