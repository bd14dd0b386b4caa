#ifndef DPPO_CONFIG_HPP_
#define DPPO_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dppo/trainer.hpp"

namespace dppo {

// Flat `key = value` configuration files; '#' starts a comment. Unspecified
// keys keep their defaults, unknown keys are rejected. Overrides apply after
// the file, in order. Keys:
//   env_id, actors, horizon, lr0, lr_decay (linear|constant), total_steps,
//   epochs, minibatch_size, gae_lambda, gamma, clip_epsilon, c1, c2,
//   dropout.mode (ratio|threshold|off), dropout.r, dropout.delta_plus,
//   dropout.delta_minus, dropout.skip_final, seed, advantage_normalization
TrainConfig parse_config(const std::filesystem::path& path,
                         const std::vector<std::pair<std::string, std::string>>&
                             overrides = {});

// Applies a single key=value assignment to an existing config.
void apply_config_value(TrainConfig& config, const std::string& key,
                        const std::string& value, const std::string& location);

// Full key=value dump of a resolved config, one key per line.
std::string dump_config(const TrainConfig& config);

}  // namespace dppo

#endif  // DPPO_CONFIG_HPP_
