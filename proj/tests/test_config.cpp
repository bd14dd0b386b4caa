#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dppo/config.hpp"

using namespace dppo;

namespace {

std::filesystem::path write_temp_config(const std::string& name,
                                        const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::trunc);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("empty file yields the published defaults") {
  const auto path = write_temp_config("dppo_cfg_empty.conf", "");
  const TrainConfig config = parse_config(path);
  CHECK(config.actors == 8);
  CHECK(config.horizon == 256);
  CHECK(config.lr0 == 2.5e-4);
  CHECK(config.lr_decay == LrDecay::kLinear);
  CHECK(config.total_steps == 10000000);
  CHECK(config.epochs == 4);
  CHECK(config.minibatch_size == 512);
  CHECK(config.gae_lambda == 0.95);
  CHECK(config.gamma == 0.99);
  CHECK(config.clip_epsilon == 0.1);
  CHECK(config.c1 == 1.0);
  CHECK(config.c2 == 0.01);
  CHECK(config.dropout.mode == DropoutMode::kRatio);
  CHECK(config.dropout.ratio == 0.2);
  CHECK(config.seed == 0);
  CHECK(config.advantage_normalization == false);
  CHECK(config.batch_size() == 2048);
  std::filesystem::remove(path);
}

TEST_CASE("file keys, comments and whitespace") {
  const auto path = write_temp_config("dppo_cfg_full.conf",
                                      "# training setup\n"
                                      "env_id = cartpole\n"
                                      "actors=4   # fewer actors\n"
                                      "  horizon =  32\n"
                                      "lr_decay = constant\n"
                                      "dropout.mode = threshold\n"
                                      "dropout.delta_plus = 1.25\n"
                                      "dropout.delta_minus = -0.5\n"
                                      "advantage_normalization = true\n");
  const TrainConfig config = parse_config(path);
  CHECK(config.env_id == "cartpole");
  CHECK(config.actors == 4);
  CHECK(config.horizon == 32);
  CHECK(config.lr_decay == LrDecay::kConstant);
  CHECK(config.dropout.mode == DropoutMode::kThreshold);
  CHECK(config.dropout.delta_plus == 1.25);
  CHECK(config.dropout.delta_minus == -0.5);
  CHECK(config.advantage_normalization == true);
  std::filesystem::remove(path);
}

TEST_CASE("overrides apply after the file") {
  const auto path = write_temp_config("dppo_cfg_ovr.conf", "dropout.r = 0.1\n");
  const TrainConfig config = parse_config(path, {{"dropout.r", "0.5"}, {"seed", "9"}});
  CHECK(config.dropout.ratio == 0.5);
  CHECK(config.seed == 9);
  std::filesystem::remove(path);
}

TEST_CASE("range violations name the offending key") {
  const auto path = write_temp_config("dppo_cfg_bad.conf", "dropout.r = 1.5\n");
  try {
    parse_config(path);
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    CHECK(message.find("r must lie in [0,1]") != std::string::npos);
    CHECK(message.find(":1") != std::string::npos);  // line number
  }
  std::filesystem::remove(path);
}

TEST_CASE("unknown keys and malformed lines are rejected with locations") {
  const auto path =
      write_temp_config("dppo_cfg_unknown.conf", "\n\nlearning_rate = 3e-4\n");
  try {
    parse_config(path);
    CHECK(false);
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    CHECK(message.find("unknown key 'learning_rate'") != std::string::npos);
    CHECK(message.find(":3") != std::string::npos);
  }
  const auto path2 = write_temp_config("dppo_cfg_noeq.conf", "just words\n");
  CHECK_THROWS_AS(parse_config(path2), ConfigError);
  const auto path3 = write_temp_config("dppo_cfg_badint.conf", "actors = many\n");
  CHECK_THROWS_AS(parse_config(path3), ConfigError);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
  std::filesystem::remove(path3);
}

TEST_CASE("missing files are reported") {
  CHECK_THROWS_AS(parse_config("/nonexistent/dppo.conf"), ConfigError);
}

TEST_CASE("config validation") {
  TrainConfig config;
  CHECK_THROWS_AS(config.validate(), ConfigError);  // env_id unset
  config.env_id = "cartpole";
  CHECK_NOTHROW(config.validate());
  config.minibatch_size = 4096;
  CHECK_THROWS_AS(config.validate(), ConfigError);  // exceeds batch
  config.minibatch_size = 512;
  config.total_steps = 100;
  CHECK_THROWS_AS(config.validate(), ConfigError);  // less than one batch
}

TEST_CASE("resolved dump round-trips through the parser") {
  TrainConfig config;
  config.env_id = "chain:5";
  config.actors = 2;
  config.horizon = 64;
  config.dropout.mode = DropoutMode::kThreshold;
  config.dropout.delta_plus = 0.75;
  config.seed = 42;
  const auto path = write_temp_config("dppo_cfg_dump.conf", dump_config(config));
  const TrainConfig parsed = parse_config(path);
  CHECK(parsed.env_id == config.env_id);
  CHECK(parsed.actors == config.actors);
  CHECK(parsed.horizon == config.horizon);
  CHECK(parsed.dropout.mode == config.dropout.mode);
  CHECK(parsed.dropout.delta_plus == config.dropout.delta_plus);
  CHECK(parsed.seed == config.seed);
  CHECK(dump_config(parsed) == dump_config(config));
  std::filesystem::remove(path);
}
