#include "dppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dppo/checkpoint.hpp"
#include "dppo/config.hpp"
#include "dppo/env.hpp"
#include "dppo/log.hpp"
#include "dppo/objective.hpp"
#include "dppo/variance_lab.hpp"

namespace dppo {

namespace {

constexpr int kCheckpointInterval = 50;
constexpr int kRollingWindow = 100;
// Global gradient-norm ceiling ahead of Adam. Value-loss spikes otherwise
// lurch the parameters hard enough to collapse a mid-training policy.
constexpr double kMaxGradNorm = 0.5;

void fisher_yates(std::vector<int>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(values[i - 1], values[j]);
  }
}

Vector gather_advantages(const TrajectoryBatch& batch, const std::vector<int>& live) {
  Vector adv(static_cast<Eigen::Index>(live.size()));
  for (std::size_t k = 0; k < live.size(); ++k)
    adv[static_cast<Eigen::Index>(k)] = batch.advantages[live[k]];
  return adv;
}

}  // namespace

void TrainConfig::validate() const {
  if (env_id.empty()) throw ConfigError("config: env_id must be set");
  if (actors < 1) throw ConfigError("config: actors must be >= 1");
  if (horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if (lr0 < 0.0) throw ConfigError("config: lr0 must be >= 0");
  if (total_steps < batch_size())
    throw ConfigError("config: total_steps must cover at least one batch (" +
                      std::to_string(batch_size()) + " steps)");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (minibatch_size < 1) throw ConfigError("config: minibatch_size must be >= 1");
  if (minibatch_size > batch_size())
    throw ConfigError("config: minibatch_size must not exceed the batch size " +
                      std::to_string(batch_size()));
  if (gae_lambda < 0.0 || gae_lambda > 1.0)
    throw ConfigError("config: gae_lambda must lie in [0,1]");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("config: gamma must lie in [0,1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("config: clip_epsilon must lie in (0,1)");
  dropout.validate();
}

double lr_schedule(std::int64_t step, std::int64_t total_steps, double lr0) {
  if (total_steps < 1) throw InputError("lr_schedule: total_steps must be >= 1");
  const double fraction =
      1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
  return std::max(0.0, lr0 * fraction);
}

NetworkArchitecture default_architecture(int observation_dim, int action_count) {
  NetworkArchitecture arch;
  arch.input_dim = observation_dim;
  arch.trunk_widths = {64, 64};
  arch.action_count = action_count;
  arch.activation = Activation::kTanh;
  return arch;
}

std::vector<UpdateRecord> run_update(ParameterVector& params, AdamState& adam,
                                     const TrajectoryBatch& batch,
                                     const TrainConfig& config, int update_index,
                                     std::int64_t steps_before, double lr,
                                     Rng& shuffle_rng, const EpisodeStats& stats) {
  if (!batch.annotated)
    throw UsageError("run_update: batch must be annotated by gae_annotate first");

  const int batch_count = batch.size();
  std::vector<int> all_indices(static_cast<std::size_t>(batch_count));
  std::iota(all_indices.begin(), all_indices.end(), 0);
  std::vector<int> live = all_indices;

  const LossSettings settings{config.clip_epsilon, config.c1, config.c2,
                              config.advantage_normalization};
  std::vector<UpdateRecord> records;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (live.empty()) {
      log_warn("update " + std::to_string(update_index) + ": live set empty, skipping epoch " +
               std::to_string(epoch));
      break;
    }

    // Metric: variance of the surrogate over the full batch, current params,
    // before this epoch's updates.
    const Vector full_ratios = ratios(params, batch, all_indices);
    const Vector full_surrogate = surrogate_values(full_ratios, batch.advantages);
    const double surrogate_variance = empirical_variance(full_surrogate);

    std::vector<int> order = live;
    fisher_yates(order, shuffle_rng);

    // Each epoch runs a fixed number of minibatches: batch_size/minibatch_size
    // at full batch (4 with the published settings). When dropout shrinks the
    // live set the minibatches shrink with it; the per-epoch update count
    // stays put ("each epoch divided into 4 mini-batches").
    const int chunks = static_cast<int>(std::min<std::int64_t>(
        static_cast<std::int64_t>(order.size()),
        std::max<std::int64_t>(1, config.batch_size() / config.minibatch_size)));

    double policy_loss_sum = 0.0;
    double value_loss_sum = 0.0;
    double entropy_sum = 0.0;
    int minibatch_count = 0;
    std::size_t start = 0;
    for (int chunk = 0; chunk < chunks; ++chunk) {
      const std::size_t remaining_chunks = static_cast<std::size_t>(chunks - chunk);
      const std::size_t size =
          (order.size() - start + remaining_chunks - 1) / remaining_chunks;
      const std::span<const int> slice(order.data() + start, size);
      start += size;
      const MinibatchData mb = gather(batch, slice);
      auto [breakdown, grad] = combined_loss_gradient(params, mb, settings);
      const double grad_norm = grad.norm();
      if (grad_norm > kMaxGradNorm) grad *= kMaxGradNorm / grad_norm;
      auto [updated, next_state] = adam_step(params.values(), grad, adam, lr);
      params.values() = std::move(updated);
      adam = std::move(next_state);
      policy_loss_sum += breakdown.policy_loss;
      value_loss_sum += breakdown.value_loss;
      entropy_sum += breakdown.entropy;
      ++minibatch_count;
    }

    // Dropout pass: surrogate recomputed on the live set with the updated
    // parameters; advantages stay as collected.
    std::optional<DropoutReport> report;
    const bool last_epoch = epoch == config.epochs - 1;
    if (config.dropout.mode != DropoutMode::kOff &&
        !(config.dropout.skip_final && last_epoch)) {
      const Vector live_ratios = ratios(params, batch, live);
      const Vector live_surrogate =
          surrogate_values(live_ratios, gather_advantages(batch, live));
      const Vector phi = phi_values(live_surrogate);
      report = apply_dropout(config.dropout, live, phi);
      live = report->kept_indices;
    }

    UpdateRecord record;
    record.global_step = steps_before + batch_count;
    record.update_index = update_index;
    record.epoch_index = epoch;
    record.mean_return = stats.rolling_mean();
    record.surrogate_variance = surrogate_variance;
    record.policy_loss = policy_loss_sum / minibatch_count;
    record.value_loss = value_loss_sum / minibatch_count;
    record.entropy = entropy_sum / minibatch_count;
    record.kept_count = static_cast<int>(live.size());
    if (report.has_value()) {
      record.dropped_phi_pos_mean = report->dropped_phi_pos_mean;
      record.dropped_phi_neg_mean = report->dropped_phi_neg_mean;
    }
    record.lr = lr;
    records.push_back(std::move(record));
  }
  return records;
}

TrainResult train(const TrainConfig& config, const std::filesystem::path& out_dir) {
  config.validate();

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "checkpoints");
  {
    std::ofstream resolved(out_dir / "config.resolved", std::ios::trunc);
    resolved << dump_config(config);
  }

  // Probe the environment once for its dimensions.
  const auto probe = make_environment(config.env_id);
  const NetworkArchitecture arch = default_architecture(
      probe->spec().observation_dim, probe->spec().action_count);

  ParameterVector params =
      ParameterVector::random_init(arch, mix_seed(config.seed, 0x1717ULL));
  AdamState adam = AdamState::zero(params.values().size());

  std::vector<ActorState> actors;
  actors.reserve(static_cast<std::size_t>(config.actors));
  for (int a = 0; a < config.actors; ++a)
    actors.emplace_back(make_environment(config.env_id),
                        mix_seed(config.seed, 0xAC70ULL + static_cast<std::uint64_t>(a)));

  EpisodeStats stats(kRollingWindow);
  Rng shuffle_rng(mix_seed(config.seed, 0x5FFULL));
  MetricsWriter metrics(out_dir / "metrics.csv");

  const int num_updates = static_cast<int>(config.total_steps / config.batch_size());
  log_info("training " + config.env_id + ": " + std::to_string(num_updates) +
           " updates of " + std::to_string(config.batch_size()) + " steps");

  TrainResult result;
  result.run_dir = out_dir;
  double best_rolling = -std::numeric_limits<double>::infinity();
  double final_rolling = 0.0;

  const auto checkpoint_path = [&out_dir](int update) {
    return out_dir / "checkpoints" / ("ckpt_" + std::to_string(update) + ".bin");
  };

  try {
    for (int update = 0; update < num_updates; ++update) {
      const std::int64_t steps_before =
          static_cast<std::int64_t>(update) * config.batch_size();
      const double lr = config.lr_decay == LrDecay::kLinear
                            ? lr_schedule(steps_before, config.total_steps, config.lr0)
                            : config.lr0;

      const PolicySnapshot snapshot(params);
      TrajectoryBatch batch = collect(snapshot, actors, config.horizon, stats);
      gae_annotate(batch, config.gae_lambda, config.gamma);

      const auto records = run_update(params, adam, batch, config, update,
                                      steps_before, lr, shuffle_rng, stats);
      for (const auto& record : records) metrics.write(record);

      if (const auto rolling = stats.rolling_mean(); rolling.has_value()) {
        best_rolling = std::max(best_rolling, *rolling);
        final_rolling = *rolling;
      }
      if ((update + 1) % kCheckpointInterval == 0)
        save_checkpoint(params, &adam, checkpoint_path(update + 1));
      log_debug("update " + std::to_string(update + 1) + "/" +
                std::to_string(num_updates) + " rolling return " +
                (stats.rolling_mean() ? format_double(*stats.rolling_mean()) : "-"));
    }
  } catch (const std::exception& e) {
    // Checkpoints written so far stay on disk.
    log_error("training aborted: " + std::string(e.what()));
    throw;
  }

  save_checkpoint(params, &adam, checkpoint_path(num_updates));

  result.updates = num_updates;
  result.episodes = stats.episode_count();
  result.best_rolling_return = stats.episode_count() > 0 ? best_rolling : 0.0;
  result.final_rolling_return = final_rolling;

  {
    std::ofstream report(out_dir / "final_report.txt", std::ios::trunc);
    report << "environment: " << config.env_id << "\n"
           << "updates: " << result.updates << "\n"
           << "batch_size: " << config.batch_size() << "\n"
           << "total_steps: " << config.batch_size() * num_updates << "\n"
           << "episodes_completed: " << result.episodes << "\n"
           << "best_rolling_mean_return: " << format_double(result.best_rolling_return)
           << "\n"
           << "final_rolling_mean_return: "
           << format_double(result.final_rolling_return) << "\n";
  }
  return result;
}

namespace {

EvaluationResult evaluate_impl(const ParameterVector& params, Environment& env,
                               int episodes, std::uint64_t seed, bool stochastic) {
  if (episodes < 1) throw InputError("evaluate: episodes must be >= 1");
  Vector returns(episodes);
  Rng sample_rng(mix_seed(seed, 0xE7A1ULL));
  for (int episode = 0; episode < episodes; ++episode) {
    Vector obs = env.reset(mix_seed(seed, static_cast<std::uint64_t>(episode)));
    double total = 0.0;
    bool done = false;
    while (!done) {
      const ForwardResult fr = forward(params, obs.transpose());
      const Vector logits = fr.logits.row(0).transpose();
      int action = 0;
      if (stochastic) {
        action = sample_rng.categorical(action_distribution(logits));
      } else {
        logits.maxCoeff(&action);
      }
      const Environment::StepResult result = env.step(action);
      total += result.reward;
      done = result.done;
      obs = result.observation;
    }
    returns[episode] = total;
  }
  EvaluationResult out;
  out.episode_returns = returns;
  out.mean_return = mean_ordered(returns);
  return out;
}

}  // namespace

EvaluationResult evaluate(const ParameterVector& params, const std::string& env_id,
                          int episodes, std::uint64_t seed, bool stochastic) {
  const auto env = make_environment(env_id);
  if (env->spec().observation_dim != params.architecture().input_dim ||
      env->spec().action_count != params.architecture().action_count)
    throw ConfigError("evaluate: environment " + env_id + " needs " +
                      std::to_string(env->spec().observation_dim) + "->" +
                      std::to_string(env->spec().action_count) +
                      " but parameters are " + params.architecture().describe());
  return evaluate_impl(params, *env, episodes, seed, stochastic);
}

EvaluationResult evaluate(const std::filesystem::path& checkpoint_path,
                          const std::string& env_id, int episodes,
                          std::uint64_t seed, bool stochastic) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  return evaluate(ckpt.params, env_id, episodes, seed, stochastic);
}

}  // namespace dppo
