#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dppo/finite_mdp.hpp"
#include "dppo/rollout.hpp"
#include "dppo/trainer.hpp"

using namespace dppo;

namespace {

std::vector<ActorState> make_actors(const std::string& env_id, int n,
                                    std::uint64_t seed) {
  std::vector<ActorState> actors;
  for (int a = 0; a < n; ++a)
    actors.emplace_back(make_environment(env_id),
                        mix_seed(seed, static_cast<std::uint64_t>(a)));
  return actors;
}

PolicySnapshot snapshot_for(const std::string& env_id, std::uint64_t seed) {
  const auto env = make_environment(env_id);
  const auto arch = default_architecture(env->spec().observation_dim,
                                         env->spec().action_count);
  return PolicySnapshot(ParameterVector::random_init(arch, seed));
}

// Reference GAE: directly evaluates the truncated sum
// A_t = sum_l (gamma*lambda)^l * delta_{t+l}, cut at the first done.
Vector brute_force_gae(const TrajectoryBatch& batch, double lambda, double gamma) {
  const int h = batch.horizon;
  Vector advantages(batch.size());
  for (int a = 0; a < batch.num_actors; ++a) {
    for (int t = 0; t < h; ++t) {
      double acc = 0.0;
      double coef = 1.0;
      for (int l = t; l < h; ++l) {
        const int row = a * h + l;
        const bool done = batch.dones[static_cast<std::size_t>(row)] != 0;
        const double next_value =
            l == h - 1 ? batch.bootstrap_values[a] : batch.old_values[row + 1];
        const double delta = batch.rewards[row] +
                             gamma * next_value * (done ? 0.0 : 1.0) -
                             batch.old_values[row];
        acc += coef * delta;
        if (done) break;
        coef *= gamma * lambda;
      }
      advantages[a * h + t] = acc;
    }
  }
  return advantages;
}

}  // namespace

TEST_CASE("collect produces N*H transitions with recorded log-probs") {
  const PolicySnapshot snapshot = snapshot_for("chain:4", 11);
  auto actors = make_actors("chain:4", 3, 5);
  EpisodeStats stats;
  const TrajectoryBatch batch = collect(snapshot, actors, 16, stats);

  CHECK(batch.size() == 48);
  CHECK(batch.observations.rows() == 48);
  for (int i = 0; i < batch.size(); ++i) {
    CHECK(batch.old_log_probs[i] <= 0.0);
    CHECK(std::isfinite(batch.old_log_probs[i]));
  }
}

TEST_CASE("single-transition collect matches direct recomputation exactly") {
  const PolicySnapshot snapshot = snapshot_for("cartpole", 3);
  auto actors = make_actors("cartpole", 1, 9);
  EpisodeStats stats;
  const TrajectoryBatch batch = collect(snapshot, actors, 1, stats);

  const ForwardResult fr =
      forward(snapshot.params(), batch.observations.row(0));
  const double lp = log_prob(fr.logits.row(0).transpose(), batch.actions[0]);
  CHECK(batch.old_log_probs[0] == lp);  // same code path, 0 ulps
  CHECK(batch.old_values[0] == fr.values[0]);
}

TEST_CASE("collect is deterministic in seeds and snapshot") {
  const PolicySnapshot snapshot = snapshot_for("cartpole", 21);
  for (int n : {1, 4}) {
    auto actors_a = make_actors("cartpole", n, 77);
    auto actors_b = make_actors("cartpole", n, 77);
    EpisodeStats stats_a, stats_b;
    const TrajectoryBatch a = collect(snapshot, actors_a, 32, stats_a);
    const TrajectoryBatch b = collect(snapshot, actors_b, 32, stats_b);

    CHECK(a.observations == b.observations);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
    CHECK(a.dones == b.dones);
    CHECK(a.old_log_probs == b.old_log_probs);
    CHECK(a.bootstrap_values == b.bootstrap_values);
    CHECK(stats_a.returns() == stats_b.returns());
  }
}

TEST_CASE("episode stats only record completed episodes") {
  const PolicySnapshot snapshot = snapshot_for("chain:3", 2);
  auto actors = make_actors("chain:3", 2, 4);
  EpisodeStats stats;
  collect(snapshot, actors, 40, stats);
  // chain:3 episodes last at most 12 steps, so plenty completed.
  CHECK(stats.episode_count() > 0);
  for (const double r : stats.returns()) CHECK(r <= 1.0);
}

TEST_CASE("gae: lambda=0 gives the one-step TD residual") {
  TrajectoryBatch batch;
  batch.num_actors = 1;
  batch.horizon = 1;
  batch.observations = Matrix::Zero(1, 1);
  batch.actions = IndexVector::Zero(1);
  batch.rewards = Vector::Constant(1, 1.0);
  batch.dones = {0};
  batch.old_log_probs = Vector::Constant(1, -0.5);
  batch.old_values = Vector::Constant(1, 1.0);
  batch.bootstrap_values = Vector::Constant(1, 0.5);

  gae_annotate(batch, 0.0, 0.99);
  CHECK(batch.advantages[0] == doctest::Approx(0.495).epsilon(1e-12));
  CHECK(batch.value_targets[0] == doctest::Approx(1.495).epsilon(1e-12));
}

TEST_CASE("gae: lambda=1, gamma=1, zero values reproduces reward-to-go") {
  TrajectoryBatch batch;
  batch.num_actors = 1;
  batch.horizon = 3;
  batch.observations = Matrix::Zero(3, 1);
  batch.actions = IndexVector::Zero(3);
  batch.rewards = Vector::Constant(3, 1.0);
  batch.dones = {0, 0, 1};
  batch.old_log_probs = Vector::Constant(3, -0.5);
  batch.old_values = Vector::Zero(3);
  batch.bootstrap_values = Vector::Constant(1, 123.0);  // masked by done

  gae_annotate(batch, 1.0, 1.0);
  CHECK(batch.advantages[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(batch.advantages[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(batch.advantages[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gae matches the brute-force truncated sum on random streams") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    TrajectoryBatch batch;
    batch.num_actors = 2;
    batch.horizon = 16;
    const int n = batch.size();
    batch.observations = Matrix::Zero(n, 1);
    batch.actions = IndexVector::Zero(n);
    batch.rewards.resize(n);
    batch.old_log_probs = Vector::Constant(n, -0.5);
    batch.old_values.resize(n);
    batch.dones.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      batch.rewards[i] = rng.uniform(-1.0, 1.0);
      batch.old_values[i] = rng.uniform(-1.0, 1.0);
      batch.dones[static_cast<std::size_t>(i)] = rng.uniform01() < 0.15 ? 1 : 0;
    }
    batch.bootstrap_values.resize(2);
    batch.bootstrap_values << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);

    const double lambda = rng.uniform01();
    const double gamma = rng.uniform01();
    gae_annotate(batch, lambda, gamma);
    const Vector expected = brute_force_gae(batch, lambda, gamma);
    for (int i = 0; i < n; ++i)
      CHECK(batch.advantages[i] == doctest::Approx(expected[i]).epsilon(1e-10));
    for (int i = 0; i < n; ++i)
      CHECK(batch.value_targets[i] ==
            doctest::Approx(expected[i] + batch.old_values[i]).epsilon(1e-10));
  }
}

TEST_CASE("the final step of an unfinished episode bootstraps") {
  TrajectoryBatch batch;
  batch.num_actors = 1;
  batch.horizon = 2;
  batch.observations = Matrix::Zero(2, 1);
  batch.actions = IndexVector::Zero(2);
  batch.rewards = Vector::Constant(2, 1.0);
  batch.dones = {0, 0};
  batch.old_log_probs = Vector::Constant(2, -0.5);
  batch.old_values = Vector::Zero(2);
  batch.bootstrap_values = Vector::Constant(1, 10.0);

  gae_annotate(batch, 0.0, 0.5);
  CHECK(batch.advantages[1] == doctest::Approx(1.0 + 0.5 * 10.0).epsilon(1e-12));
}

TEST_CASE("a done flag cuts credit: later rewards cannot reach earlier steps") {
  const auto build = [](double late_reward) {
    TrajectoryBatch batch;
    batch.num_actors = 1;
    batch.horizon = 4;
    batch.observations = Matrix::Zero(4, 1);
    batch.actions = IndexVector::Zero(4);
    batch.rewards.resize(4);
    batch.rewards << 0.3, 0.7, late_reward, late_reward;
    batch.dones = {0, 1, 0, 0};
    batch.old_log_probs = Vector::Constant(4, -0.5);
    batch.old_values = Vector::Constant(4, 0.2);
    batch.bootstrap_values = Vector::Constant(1, late_reward);
    gae_annotate(batch, 0.95, 0.99);
    return batch;
  };
  const TrajectoryBatch a = build(5.0);
  const TrajectoryBatch b = build(-5.0);
  CHECK(a.advantages[0] == b.advantages[0]);
  CHECK(a.advantages[1] == b.advantages[1]);
  CHECK(a.advantages[2] != b.advantages[2]);
}

TEST_CASE("gather rejects unannotated batches and bad indices") {
  const PolicySnapshot snapshot = snapshot_for("chain:3", 2);
  auto actors = make_actors("chain:3", 1, 4);
  EpisodeStats stats;
  TrajectoryBatch batch = collect(snapshot, actors, 4, stats);

  const std::vector<int> indices{0, 1};
  CHECK_THROWS_AS(gather(batch, indices), UsageError);
  gae_annotate(batch, 0.95, 0.99);
  const MinibatchData mb = gather(batch, indices);
  CHECK(mb.actions.size() == 2);
  const std::vector<int> bad{batch.size()};
  CHECK_THROWS_AS(gather(batch, bad), InputError);
}

TEST_CASE("rolling mean uses the window") {
  EpisodeStats stats(3);
  CHECK(!stats.rolling_mean().has_value());
  stats.add(1.0);
  stats.add(2.0);
  CHECK(stats.rolling_mean().value() == doctest::Approx(1.5));
  stats.add(3.0);
  stats.add(10.0);
  CHECK(stats.rolling_mean().value() == doctest::Approx(5.0));
}
