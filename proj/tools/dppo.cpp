// Command-line front end: train / eval / verify / plot.

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "dppo/config.hpp"
#include "dppo/log.hpp"
#include "dppo/metrics.hpp"
#include "dppo/plot.hpp"
#include "dppo/trainer.hpp"
#include "dppo/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitRuntime = 3;

std::vector<std::pair<std::string, std::string>> split_overrides(
    const std::vector<std::string>& assignments) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& assignment : assignments) {
    const auto equals = assignment.find('=');
    if (equals == std::string::npos)
      throw dppo::ConfigError("--set expects key=value, got '" + assignment + "'");
    overrides.emplace_back(assignment.substr(0, equals), assignment.substr(equals + 1));
  }
  return overrides;
}

int run_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::optional<std::uint64_t>& seed, const std::string& out_dir) {
  auto overrides = split_overrides(sets);
  if (seed.has_value()) overrides.emplace_back("seed", std::to_string(*seed));
  const dppo::TrainConfig config = dppo::parse_config(config_path, overrides);
  config.validate();

  std::string out = out_dir;
  if (out.empty())
    out = "runs/" + config.env_id + "_seed" + std::to_string(config.seed);
  const dppo::TrainResult result = dppo::train(config, out);
  std::printf("run directory: %s\n", result.run_dir.string().c_str());
  std::printf("updates: %d, episodes: %lld, best rolling return: %s\n",
              result.updates, static_cast<long long>(result.episodes),
              dppo::format_double(result.best_rolling_return).c_str());
  return kExitOk;
}

int run_eval(const std::string& checkpoint, const std::string& env_id, int episodes,
             std::uint64_t seed, bool stochastic) {
  const dppo::EvaluationResult result =
      dppo::evaluate(std::filesystem::path(checkpoint), env_id, episodes, seed,
                     stochastic);
  for (Eigen::Index i = 0; i < result.episode_returns.size(); ++i)
    std::printf("episode %lld: %s\n", static_cast<long long>(i),
                dppo::format_double(result.episode_returns[i]).c_str());
  std::printf("mean return over %d episodes: %s\n", episodes,
              dppo::format_double(result.mean_return).c_str());
  return kExitOk;
}

int run_verify(int instances, std::uint64_t seed) {
  using dppo::SweepResult;
  std::vector<SweepResult> sweeps;
  sweeps.push_back(dppo::sweep_variance_identities(instances, seed, 1e-10));
  sweeps.push_back(dppo::sweep_mdp_identities(50, seed, 1e-10));
  sweeps.push_back(dppo::sweep_phi_bruteforce({1, 2, 3, 64, 1024, 4096}, seed, 1e-9));
  sweeps.push_back(dppo::sweep_dropout_fraction({0.1, 0.2, 0.3, 0.4, 0.5}, 200, 2048, seed));
  sweeps.push_back(dppo::sweep_gradient_check(100, seed, 1e-4));

  bool all_passed = true;
  for (const auto& sweep : sweeps) {
    std::printf("%-26s %4d instances  worst %.3e  %s\n", sweep.name.c_str(),
                sweep.instances, sweep.worst,
                sweep.passed() ? "ok" : ("FAILED: " + sweep.detail).c_str());
    all_passed = all_passed && sweep.passed();
  }
  return all_passed ? kExitOk : kExitVerification;
}

int run_plot(const std::string& metrics, const std::string& out_dir) {
  dppo::plot_metrics(metrics, out_dir);
  std::printf("wrote %s/return_curve.svg and %s/surrogate_variance_curve.svg\n",
              out_dir.c_str(), out_dir.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPO with variance-limiting sample dropout (D-PPO)"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a policy");
  std::string train_config;
  std::string train_out;
  std::optional<std::uint64_t> train_seed;
  std::vector<std::string> train_sets;
  train->add_option("--config", train_config, "config file (key = value lines)")
      ->required();
  train->add_option("--seed", train_seed, "override the config seed");
  train->add_option("--out", train_out, "run directory");
  train->add_option("--set", train_sets, "config override key=value (repeatable)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint;
  std::string eval_env;
  int eval_episodes = 20;
  std::uint64_t eval_seed = 0;
  bool eval_stochastic = false;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("--env", eval_env, "environment id")->required();
  eval->add_option("--episodes", eval_episodes, "episode count")->required();
  eval->add_option("--seed", eval_seed, "evaluation seed")->required();
  eval->add_flag("--stochastic", eval_stochastic,
                 "sample actions instead of argmax");

  // verify
  auto* verify = app.add_subcommand("verify", "run the oracle sweeps");
  int verify_instances = 1000;
  std::uint64_t verify_seed = 0;
  verify->add_option("--instances", verify_instances,
                     "random variance instances (default 1000)");
  verify->add_option("--seed", verify_seed, "sweep seed");

  // plot
  auto* plot = app.add_subcommand("plot", "render metrics.csv as SVG charts");
  std::string plot_metrics_path;
  std::string plot_out;
  plot->add_option("--metrics", plot_metrics_path, "metrics.csv path")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed())
      return run_train(train_config, train_sets, train_seed, train_out);
    if (eval->parsed())
      return run_eval(eval_checkpoint, eval_env, eval_episodes, eval_seed,
                      eval_stochastic);
    if (verify->parsed()) return run_verify(verify_instances, verify_seed);
    if (plot->parsed()) return run_plot(plot_metrics_path, plot_out);
  } catch (const dppo::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dppo::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dppo::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dppo::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const dppo::VerificationError& e) {
    std::fprintf(stderr, "verification failure: %s\n", e.what());
    return kExitVerification;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime fault: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
