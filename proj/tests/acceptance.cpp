// Acceptance suite: one line per criterion, nonzero exit if any hard
// criterion fails. Training runs land in ./acceptance_runs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "dppo/checkpoint.hpp"
#include "dppo/config.hpp"
#include "dppo/metrics.hpp"
#include "dppo/trainer.hpp"
#include "dppo/verify.hpp"

using namespace dppo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  bool soft = false;  // reported, never gates the exit code
  std::string detail;
};

class Harness {
 public:
  void run(int number, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = body();
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* verdict = outcome.soft ? (outcome.passed ? "PASS (soft)" : "MISS (soft)")
                                       : (outcome.passed ? "PASS" : "FAIL");
    std::printf("criterion %2d [%s] %s: %s [%.1fs]\n", number, verdict, name.c_str(),
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    if (!outcome.soft && !outcome.passed) failed_ = true;
  }

  int exit_code() const { return failed_ ? 1 : 0; }

 private:
  bool failed_ = false;
};

constexpr std::uint64_t kSweepSeed = 20240811;
const std::vector<std::uint64_t> kSeeds{2, 3, 5};

TrainConfig desk_config(bool dropout_on, std::uint64_t seed) {
  TrainConfig config;
  config.env_id = "cartpole";
  config.total_steps = 300000;
  config.actors = 8;
  config.horizon = 64;
  // At this batch size (8*64 = 512) the published table pins four minibatches
  // per epoch, i.e. minibatches of 128.
  config.minibatch_size = 128;
  if (!dropout_on) config.dropout.mode = DropoutMode::kOff;
  config.seed = seed;
  return config;
}

fs::path run_dir(bool dropout_on, std::uint64_t seed, const std::string& suffix = "") {
  return fs::path("acceptance_runs") /
         ((dropout_on ? "dppo_seed" : "ppo_seed") + std::to_string(seed) + suffix);
}

Outcome from_sweep(const SweepResult& sweep, double tolerance) {
  Outcome outcome;
  outcome.passed = sweep.passed();
  char buffer[160];
  std::snprintf(buffer, sizeof buffer, "%d instances, worst %.3e (tol %.0e)%s%s",
                sweep.instances, sweep.worst, tolerance,
                sweep.passed() ? "" : " first failure: ",
                sweep.passed() ? "" : sweep.detail.c_str());
  outcome.detail = buffer;
  return outcome;
}

double best_rolling_return(const fs::path& dir) {
  const MetricsTable table = read_metrics_csv(dir / "metrics.csv");
  double best = -1e18;
  for (const double v : table.column_values("mean_return")) best = std::max(best, v);
  return best;
}

double late_variance_mean(const fs::path& dir, double fraction) {
  const MetricsTable table = read_metrics_csv(dir / "metrics.csv");
  const int step_col = table.column_index("global_step");
  const int var_col = table.column_index("surrogate_variance");
  double last_step = 0.0;
  for (const auto& row : table.rows)
    last_step = std::max(last_step, row[static_cast<std::size_t>(step_col)].value_or(0.0));
  const double threshold = (1.0 - fraction) * last_step;
  double sum = 0.0;
  int count = 0;
  for (const auto& row : table.rows) {
    if (row[static_cast<std::size_t>(step_col)].value_or(0.0) < threshold) continue;
    if (const auto v = row[static_cast<std::size_t>(var_col)]; v.has_value()) {
      sum += *v;
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main() {
  Harness harness;

  harness.run(1, "variance identity suite", [] {
    return from_sweep(sweep_variance_identities(1000, kSweepSeed, 1e-10, 64), 1e-10);
  });

  harness.run(2, "mdp-grounded identities", [] {
    return from_sweep(sweep_mdp_identities(50, kSweepSeed, 1e-10, 8, 4), 1e-10);
  });

  harness.run(3, "phi brute-force oracle", [] {
    return from_sweep(
        sweep_phi_bruteforce({1, 2, 3, 64, 1024, 4096}, kSweepSeed, 1e-9), 1e-9);
  });

  harness.run(4, "dropout fraction and order consistency", [] {
    return from_sweep(
        sweep_dropout_fraction({0.1, 0.2, 0.3, 0.4, 0.5}, 200, 2048, kSweepSeed), 0.0);
  });

  harness.run(5, "gradient vs central finite differences", [] {
    return from_sweep(sweep_gradient_check(100, kSweepSeed, 1e-4, 1e-5), 1e-4);
  });

  harness.run(6, "ppo-mode equivalence over 10 updates", [] {
    TrainConfig config;  // published defaults: batch 2048, minibatch 512
    config.env_id = "cartpole";
    config.total_steps = 10 * config.batch_size();
    config.dropout.mode = DropoutMode::kOff;
    config.seed = 1;
    const fs::path dir = fs::path("acceptance_runs") / "ppo_equivalence";
    fs::remove_all(dir);
    train(config, dir);

    const MetricsTable table = read_metrics_csv(dir / "metrics.csv");
    bool live_constant = true;
    for (const double kept : table.column_values("kept_count"))
      live_constant = live_constant && kept == static_cast<double>(config.batch_size());
    const Checkpoint ckpt = load_checkpoint(dir / "checkpoints" / "ckpt_10.bin");
    const std::int64_t expected_steps =
        10LL * config.epochs * (config.batch_size() / config.minibatch_size);
    const bool steps_exact =
        ckpt.adam.has_value() && ckpt.adam->step_count == expected_steps;

    Outcome outcome;
    outcome.passed = live_constant && steps_exact;
    outcome.detail = "live set constant: " + std::string(live_constant ? "yes" : "NO") +
                     ", adam steps " +
                     std::to_string(ckpt.adam ? ckpt.adam->step_count : -1) + " of " +
                     std::to_string(expected_steps);
    return outcome;
  });

  // Criteria 7-9 share these six desk-scale runs (plus one repeat).
  harness.run(7, "desk-scale cartpole training (3 seeds x 2 modes)", [] {
    std::vector<std::thread> workers;
    for (const bool dropout_on : {false, true})
      for (const std::uint64_t seed : kSeeds)
        workers.emplace_back([dropout_on, seed] {
          const fs::path dir = run_dir(dropout_on, seed);
          fs::remove_all(dir);
          train(desk_config(dropout_on, seed), dir);
        });
    for (auto& w : workers) w.join();

    Outcome outcome;
    outcome.passed = true;
    for (const bool dropout_on : {false, true}) {
      for (const std::uint64_t seed : kSeeds) {
        const double best = best_rolling_return(run_dir(dropout_on, seed));
        outcome.passed = outcome.passed && best >= 475.0;
        char buffer[64];
        std::snprintf(buffer, sizeof buffer, "%s s%llu %.1f%s ",
                      dropout_on ? "dppo" : "ppo",
                      static_cast<unsigned long long>(seed), best,
                      best >= 475.0 ? "" : "(<475)");
        outcome.detail += buffer;
      }
    }
    return outcome;
  });

  harness.run(8, "late-training surrogate variance, dppo vs ppo", [] {
    Outcome outcome;
    outcome.soft = true;
    int wins = 0;
    for (const std::uint64_t seed : kSeeds) {
      const double ppo = late_variance_mean(run_dir(false, seed), 0.2);
      const double dppo = late_variance_mean(run_dir(true, seed), 0.2);
      if (dppo <= ppo) ++wins;
      char buffer[96];
      std::snprintf(buffer, sizeof buffer, "s%llu ppo %.1f dppo %.1f; ",
                    static_cast<unsigned long long>(seed), ppo, dppo);
      outcome.detail += buffer;
    }
    outcome.passed = wins >= 2;
    outcome.detail += "dppo lower in " + std::to_string(wins) + "/3";
    return outcome;
  });

  harness.run(9, "bit-identical metrics across repeated runs", [] {
    const std::uint64_t seed = kSeeds.front();
    const fs::path repeat = run_dir(true, seed, "_repeat");
    fs::remove_all(repeat);
    train(desk_config(true, seed), repeat);
    const std::string a = slurp(run_dir(true, seed) / "metrics.csv");
    const std::string b = slurp(repeat / "metrics.csv");
    Outcome outcome;
    outcome.passed = !a.empty() && a == b;
    outcome.detail = outcome.passed ? "dppo seed " + std::to_string(seed) +
                                          " metrics.csv identical across runs"
                                    : "metrics differ";
    return outcome;
  });

  harness.run(10, "hyperparameter defaults from an empty config", [] {
    const fs::path path = fs::temp_directory_path() / "dppo_acceptance_empty.conf";
    std::ofstream(path, std::ios::trunc).close();
    const TrainConfig config = parse_config(path);
    fs::remove(path);

    const bool ok = config.dropout.mode == DropoutMode::kRatio &&
                    config.dropout.ratio == 0.2 && config.clip_epsilon == 0.1 &&
                    config.gae_lambda == 0.95 && config.gamma == 0.99 &&
                    config.lr0 == 2.5e-4 && config.c1 == 1.0 && config.c2 == 0.01 &&
                    config.epochs == 4 && config.minibatch_size == 512 &&
                    config.actors == 8 && config.horizon == 256 &&
                    config.lr_decay == LrDecay::kLinear &&
                    config.total_steps == 10000000 &&
                    config.advantage_normalization == false;
    Outcome outcome;
    outcome.passed = ok;
    outcome.detail = ok ? "every default matches the published table"
                        : "default mismatch";
    return outcome;
  });

  return harness.exit_code();
}
