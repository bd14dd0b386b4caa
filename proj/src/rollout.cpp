#include "dppo/rollout.hpp"

#include <algorithm>
#include <exception>
#include <thread>

namespace dppo {

MinibatchData gather(const TrajectoryBatch& batch, std::span<const int> indices) {
  if (!batch.annotated)
    throw UsageError("gather: batch must be annotated by gae_annotate first");
  MinibatchData mb;
  const int m = static_cast<int>(indices.size());
  mb.observations.resize(m, batch.observations.cols());
  mb.actions.resize(m);
  mb.old_log_probs.resize(m);
  mb.advantages.resize(m);
  mb.value_targets.resize(m);
  for (int k = 0; k < m; ++k) {
    const int i = indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= batch.size())
      throw InputError("gather: index out of range");
    mb.observations.row(k) = batch.observations.row(i);
    mb.actions[k] = batch.actions[i];
    mb.old_log_probs[k] = batch.old_log_probs[i];
    mb.advantages[k] = batch.advantages[i];
    mb.value_targets[k] = batch.value_targets[i];
  }
  return mb;
}

EpisodeStats::EpisodeStats(int window) : window_(window) {
  if (window < 1) throw InputError("EpisodeStats: window must be >= 1");
}

void EpisodeStats::add(double episode_return) { returns_.push_back(episode_return); }

std::optional<double> EpisodeStats::rolling_mean() const {
  if (returns_.empty()) return std::nullopt;
  const std::size_t n = std::min<std::size_t>(returns_.size(),
                                              static_cast<std::size_t>(window_));
  double acc = 0.0;
  for (std::size_t i = returns_.size() - n; i < returns_.size(); ++i)
    acc += returns_[i];
  return acc / static_cast<double>(n);
}

ActorState::ActorState(std::unique_ptr<Environment> environment, std::uint64_t seed)
    : env(std::move(environment)), rng(seed) {
  observation = env->reset(rng.next_u64());
}

namespace {

struct CompletedEpisode {
  int step = 0;
  int actor = 0;
  double total_return = 0.0;
};

struct ActorOutput {
  std::vector<CompletedEpisode> episodes;
  std::exception_ptr error;
};

void run_actor(int actor_index, const PolicySnapshot& snapshot, ActorState& actor,
               int horizon, TrajectoryBatch& batch, ActorOutput& output) {
  try {
    const int base = actor_index * horizon;
    for (int t = 0; t < horizon; ++t) {
      const int row = base + t;
      batch.observations.row(row) = actor.observation.transpose();

      const ForwardResult fr =
          forward(snapshot.params(), actor.observation.transpose());
      const Vector logits = fr.logits.row(0).transpose();
      const Vector probs = action_distribution(logits);
      const int action = actor.rng.categorical(probs);

      batch.actions[row] = action;
      batch.old_log_probs[row] = log_prob(logits, action);
      batch.old_values[row] = fr.values[0];

      const Environment::StepResult result = actor.env->step(action);
      batch.rewards[row] = result.reward;
      batch.dones[static_cast<std::size_t>(row)] = result.done ? 1 : 0;
      actor.episode_return += result.reward;

      if (result.done) {
        output.episodes.push_back(
            CompletedEpisode{t, actor_index, actor.episode_return});
        actor.episode_return = 0.0;
        actor.observation = actor.env->reset(actor.rng.next_u64());
      } else {
        actor.observation = result.observation;
      }
    }
    const ForwardResult fr =
        forward(snapshot.params(), actor.observation.transpose());
    batch.bootstrap_values[actor_index] = fr.values[0];
  } catch (...) {
    output.error = std::current_exception();
  }
}

}  // namespace

TrajectoryBatch collect(const PolicySnapshot& snapshot,
                        std::vector<ActorState>& actors, int horizon,
                        EpisodeStats& stats) {
  const int n = static_cast<int>(actors.size());
  if (n < 1) throw InputError("collect: need at least one actor");
  if (horizon < 1) throw InputError("collect: horizon must be >= 1");
  const int obs_dim = actors.front().env->spec().observation_dim;

  TrajectoryBatch batch;
  batch.num_actors = n;
  batch.horizon = horizon;
  batch.observations.resize(n * horizon, obs_dim);
  batch.actions.resize(n * horizon);
  batch.rewards.resize(n * horizon);
  batch.dones.assign(static_cast<std::size_t>(n * horizon), 0);
  batch.old_log_probs.resize(n * horizon);
  batch.old_values.resize(n * horizon);
  batch.bootstrap_values.resize(n);

  std::vector<ActorOutput> outputs(static_cast<std::size_t>(n));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    threads.emplace_back(run_actor, a, std::cref(snapshot),
                         std::ref(actors[static_cast<std::size_t>(a)]), horizon,
                         std::ref(batch), std::ref(outputs[static_cast<std::size_t>(a)]));
  for (auto& thread : threads) thread.join();

  for (int a = 0; a < n; ++a) {
    if (outputs[static_cast<std::size_t>(a)].error) {
      try {
        std::rethrow_exception(outputs[static_cast<std::size_t>(a)].error);
      } catch (const std::exception& e) {
        throw Error("actor " + std::to_string(a) + ": " + e.what());
      }
    }
  }

  // Merge completed episodes in completion order, ties by actor index, so the
  // rolling mean does not depend on thread scheduling.
  std::vector<CompletedEpisode> completed;
  for (const auto& output : outputs)
    completed.insert(completed.end(), output.episodes.begin(), output.episodes.end());
  std::sort(completed.begin(), completed.end(),
            [](const CompletedEpisode& x, const CompletedEpisode& y) {
              return x.step != y.step ? x.step < y.step : x.actor < y.actor;
            });
  for (const auto& episode : completed) stats.add(episode.total_return);

  return batch;
}

void gae_annotate(TrajectoryBatch& batch, double lambda, double gamma) {
  if (lambda < 0.0 || lambda > 1.0)
    throw InputError("gae_annotate: lambda must lie in [0,1]");
  if (gamma < 0.0 || gamma > 1.0)
    throw InputError("gae_annotate: gamma must lie in [0,1]");
  if (batch.size() == 0) throw InputError("gae_annotate: empty batch");

  const int h = batch.horizon;
  batch.advantages.resize(batch.size());
  batch.value_targets.resize(batch.size());

  for (int a = 0; a < batch.num_actors; ++a) {
    const int base = a * h;
    double next_advantage = 0.0;
    for (int t = h - 1; t >= 0; --t) {
      const int row = base + t;
      const double not_done = batch.dones[static_cast<std::size_t>(row)] ? 0.0 : 1.0;
      const double next_value =
          t == h - 1 ? batch.bootstrap_values[a] : batch.old_values[row + 1];
      const double delta = batch.rewards[row] + gamma * next_value * not_done -
                           batch.old_values[row];
      next_advantage = delta + gamma * lambda * not_done * next_advantage;
      batch.advantages[row] = next_advantage;
      batch.value_targets[row] = next_advantage + batch.old_values[row];
    }
  }
  batch.annotated = true;
}

}  // namespace dppo
