#include "dppo/config.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dppo/metrics.hpp"

namespace dppo {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& location, const std::string& expected) {
  throw ConfigError("config (" + location + "): key '" + key + "' = '" + value +
                    "': expected " + expected);
}

double parse_real(const std::string& key, const std::string& value,
                  const std::string& location) {
  try {
    std::size_t consumed = 0;
    const double parsed = std::stod(value, &consumed);
    if (consumed != value.size() || !std::isfinite(parsed))
      bad_value(key, value, location, "a finite real number");
    return parsed;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value, location, "a finite real number");
  }
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& value,
                  const std::string& location) {
  Int parsed{};
  const auto result = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (result.ec != std::errc() || result.ptr != value.data() + value.size())
    bad_value(key, value, location, "an integer");
  return parsed;
}

bool parse_bool(const std::string& key, const std::string& value,
                const std::string& location) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, location, "true or false");
}

}  // namespace

void apply_config_value(TrainConfig& config, const std::string& key,
                        const std::string& value, const std::string& location) {
  if (key == "env_id") {
    config.env_id = value;
  } else if (key == "actors") {
    config.actors = parse_integer<int>(key, value, location);
    if (config.actors < 1) bad_value(key, value, location, "an integer >= 1");
  } else if (key == "horizon") {
    config.horizon = parse_integer<int>(key, value, location);
    if (config.horizon < 1) bad_value(key, value, location, "an integer >= 1");
  } else if (key == "lr0") {
    config.lr0 = parse_real(key, value, location);
    if (config.lr0 < 0.0) bad_value(key, value, location, "a real >= 0");
  } else if (key == "lr_decay") {
    if (value == "linear") config.lr_decay = LrDecay::kLinear;
    else if (value == "constant") config.lr_decay = LrDecay::kConstant;
    else bad_value(key, value, location, "linear or constant");
  } else if (key == "total_steps") {
    config.total_steps = parse_integer<std::int64_t>(key, value, location);
    if (config.total_steps < 1) bad_value(key, value, location, "an integer >= 1");
  } else if (key == "epochs") {
    config.epochs = parse_integer<int>(key, value, location);
    if (config.epochs < 1) bad_value(key, value, location, "an integer >= 1");
  } else if (key == "minibatch_size") {
    config.minibatch_size = parse_integer<int>(key, value, location);
    if (config.minibatch_size < 1) bad_value(key, value, location, "an integer >= 1");
  } else if (key == "gae_lambda") {
    config.gae_lambda = parse_real(key, value, location);
    if (config.gae_lambda < 0.0 || config.gae_lambda > 1.0)
      bad_value(key, value, location, "a real in [0,1]");
  } else if (key == "gamma") {
    config.gamma = parse_real(key, value, location);
    if (config.gamma < 0.0 || config.gamma > 1.0)
      bad_value(key, value, location, "a real in [0,1]");
  } else if (key == "clip_epsilon") {
    config.clip_epsilon = parse_real(key, value, location);
    if (!(config.clip_epsilon > 0.0 && config.clip_epsilon < 1.0))
      bad_value(key, value, location, "a real in (0,1)");
  } else if (key == "c1") {
    config.c1 = parse_real(key, value, location);
  } else if (key == "c2") {
    config.c2 = parse_real(key, value, location);
  } else if (key == "dropout.mode") {
    config.dropout.mode = dropout_mode_from_string(value);
  } else if (key == "dropout.r") {
    config.dropout.ratio = parse_real(key, value, location);
    if (config.dropout.ratio < 0.0 || config.dropout.ratio > 1.0)
      throw ConfigError("config (" + location + "): r must lie in [0,1]");
  } else if (key == "dropout.delta_plus") {
    config.dropout.delta_plus = parse_real(key, value, location);
  } else if (key == "dropout.delta_minus") {
    config.dropout.delta_minus = parse_real(key, value, location);
  } else if (key == "dropout.skip_final") {
    config.dropout.skip_final = parse_bool(key, value, location);
  } else if (key == "seed") {
    config.seed = parse_integer<std::uint64_t>(key, value, location);
  } else if (key == "advantage_normalization") {
    config.advantage_normalization = parse_bool(key, value, location);
  } else {
    throw ConfigError("config (" + location + "): unknown key '" + key + "'");
  }
}

TrainConfig parse_config(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream stream(path);
  if (!stream) throw ConfigError("config: cannot open '" + path.string() + "'");

  TrainConfig config;
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto equals = trimmed.find('=');
    const std::string location = path.string() + ":" + std::to_string(line_number);
    if (equals == std::string::npos)
      throw ConfigError("config (" + location + "): expected 'key = value', got '" +
                        trimmed + "'");
    const std::string key = trim(trimmed.substr(0, equals));
    const std::string value = trim(trimmed.substr(equals + 1));
    if (key.empty())
      throw ConfigError("config (" + location + "): missing key before '='");
    apply_config_value(config, key, value, location);
  }

  for (const auto& [key, value] : overrides)
    apply_config_value(config, key, value, "override");
  return config;
}

std::string dump_config(const TrainConfig& config) {
  std::ostringstream out;
  out << "env_id = " << config.env_id << "\n"
      << "actors = " << config.actors << "\n"
      << "horizon = " << config.horizon << "\n"
      << "lr0 = " << format_double(config.lr0) << "\n"
      << "lr_decay = " << (config.lr_decay == LrDecay::kLinear ? "linear" : "constant")
      << "\n"
      << "total_steps = " << config.total_steps << "\n"
      << "epochs = " << config.epochs << "\n"
      << "minibatch_size = " << config.minibatch_size << "\n"
      << "gae_lambda = " << format_double(config.gae_lambda) << "\n"
      << "gamma = " << format_double(config.gamma) << "\n"
      << "clip_epsilon = " << format_double(config.clip_epsilon) << "\n"
      << "c1 = " << format_double(config.c1) << "\n"
      << "c2 = " << format_double(config.c2) << "\n"
      << "dropout.mode = " << to_string(config.dropout.mode) << "\n"
      << "dropout.r = " << format_double(config.dropout.ratio) << "\n"
      << "dropout.delta_plus = " << format_double(config.dropout.delta_plus) << "\n"
      << "dropout.delta_minus = " << format_double(config.dropout.delta_minus) << "\n"
      << "dropout.skip_final = " << (config.dropout.skip_final ? "true" : "false")
      << "\n"
      << "seed = " << config.seed << "\n"
      << "advantage_normalization = "
      << (config.advantage_normalization ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace dppo
