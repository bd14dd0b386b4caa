#include "dppo/dropout.hpp"

#include <algorithm>
#include <cmath>

#include "dppo/log.hpp"

namespace dppo {

void DropoutConfig::validate() const {
  if (mode == DropoutMode::kRatio && !(ratio >= 0.0 && ratio <= 1.0))
    throw ConfigError("dropout: r must lie in [0,1]");
  if (mode == DropoutMode::kThreshold &&
      (!std::isfinite(delta_plus) || !std::isfinite(delta_minus)))
    throw ConfigError("dropout: thresholds must be finite");
}

Vector phi_values(const ConstVectorRef& surrogates) {
  if (surrogates.size() < 1) throw InputError("phi_values: empty input");
  const double total = sum_ordered(surrogates);
  return surrogates.array() * total - surrogates.array().square();
}

SignPartition partition(std::span<const int> indices, const ConstVectorRef& phi) {
  if (static_cast<Eigen::Index>(indices.size()) != phi.size())
    throw InputError("partition: indices and phi lengths differ");
  SignPartition parts;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (phi[static_cast<Eigen::Index>(k)] >= 0.0)
      parts.plus.push_back(static_cast<int>(k));
    else
      parts.minus.push_back(static_cast<int>(k));
  }
  return parts;
}

double quantile_select(std::vector<double> values, double r) {
  if (values.empty()) throw InputError("quantile_select: empty set");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double best = values.front();
  double best_error = std::abs(0.0 - r);
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] == values[k - 1]) continue;  // same element of the set M
    const double error = std::abs(static_cast<double>(k) / n - r);
    if (error < best_error) {
      best = values[k];
      best_error = error;
    }
  }
  return best;
}

namespace {

// positions index into `indices`/`phi`, not into the caller's batch.
struct PartitionOutcome {
  std::optional<double> threshold;
  std::vector<char> keep;  // aligned with positions
};

PartitionOutcome ratio_partition_outcome(const std::vector<int>& positions,
                                         const ConstVectorRef& phi, double r,
                                         const char* side) {
  PartitionOutcome outcome;
  outcome.keep.assign(positions.size(), 1);
  if (positions.empty()) return outcome;

  std::vector<double> values;
  values.reserve(positions.size());
  for (const int p : positions) values.push_back(phi[p]);

  const bool constant =
      std::all_of(values.begin(), values.end(),
                  [&values](double v) { return v == values.front(); });
  if (constant) {
    // Keeping phi > quantile would empty the partition. Single-element
    // partitions hit this constantly; only flag the multi-element case.
    if (positions.size() > 1)
      log_warn(std::string("dropout: all phi equal in the ") + side +
               " partition (" + std::to_string(positions.size()) +
               " samples); keeping it intact");
    return outcome;
  }

  const double threshold = quantile_select(values, r);
  outcome.threshold = threshold;
  for (std::size_t k = 0; k < positions.size(); ++k)
    outcome.keep[k] = values[k] > threshold ? 1 : 0;
  return outcome;
}

DropoutReport assemble_report(std::span<const int> indices, const ConstVectorRef& phi,
                              const SignPartition& parts,
                              const PartitionOutcome& plus,
                              const PartitionOutcome& minus) {
  std::vector<char> keep(indices.size(), 0);
  for (std::size_t k = 0; k < parts.plus.size(); ++k)
    keep[static_cast<std::size_t>(parts.plus[k])] = plus.keep[k];
  for (std::size_t k = 0; k < parts.minus.size(); ++k)
    keep[static_cast<std::size_t>(parts.minus[k])] = minus.keep[k];

  DropoutReport report;
  report.delta_plus_used = plus.threshold;
  report.delta_minus_used = minus.threshold;

  double dropped_pos_sum = 0.0;
  int dropped_pos = 0;
  double dropped_neg_sum = 0.0;
  int dropped_neg = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (keep[k]) {
      report.kept_indices.push_back(indices[k]);
    } else {
      const double value = phi[static_cast<Eigen::Index>(k)];
      if (value >= 0.0) {
        dropped_pos_sum += value;
        ++dropped_pos;
      } else {
        dropped_neg_sum += value;
        ++dropped_neg;
      }
    }
  }
  if (dropped_pos > 0) report.dropped_phi_pos_mean = dropped_pos_sum / dropped_pos;
  if (dropped_neg > 0) report.dropped_phi_neg_mean = dropped_neg_sum / dropped_neg;
  report.kept_count = static_cast<int>(report.kept_indices.size());
  report.dropped_count = static_cast<int>(indices.size()) - report.kept_count;
  return report;
}

DropoutReport keep_everything(std::span<const int> indices) {
  DropoutReport report;
  report.kept_indices.assign(indices.begin(), indices.end());
  report.kept_count = static_cast<int>(indices.size());
  report.dropped_count = 0;
  return report;
}

}  // namespace

DropoutReport apply_ratio_dropout(std::span<const int> indices,
                                  const ConstVectorRef& phi, double r) {
  if (static_cast<Eigen::Index>(indices.size()) != phi.size())
    throw InputError("apply_ratio_dropout: indices and phi lengths differ");
  if (!(r >= 0.0 && r <= 1.0))
    throw InputError("apply_ratio_dropout: r must lie in [0,1]");
  if (r == 0.0) return keep_everything(indices);

  const SignPartition parts = partition(indices, phi);
  const PartitionOutcome plus = ratio_partition_outcome(parts.plus, phi, r, "plus");
  const PartitionOutcome minus = ratio_partition_outcome(parts.minus, phi, r, "minus");
  return assemble_report(indices, phi, parts, plus, minus);
}

DropoutReport apply_threshold_dropout(std::span<const int> indices,
                                      const ConstVectorRef& phi,
                                      double delta_plus, double delta_minus) {
  if (static_cast<Eigen::Index>(indices.size()) != phi.size())
    throw InputError("apply_threshold_dropout: indices and phi lengths differ");

  const SignPartition parts = partition(indices, phi);
  PartitionOutcome plus;
  plus.threshold = delta_plus;
  plus.keep.resize(parts.plus.size());
  for (std::size_t k = 0; k < parts.plus.size(); ++k)
    plus.keep[k] = phi[parts.plus[k]] > delta_plus ? 1 : 0;

  PartitionOutcome minus;
  minus.threshold = delta_minus;
  minus.keep.resize(parts.minus.size());
  for (std::size_t k = 0; k < parts.minus.size(); ++k)
    minus.keep[k] = phi[parts.minus[k]] > delta_minus ? 1 : 0;

  DropoutReport report = assemble_report(indices, phi, parts, plus, minus);
  // Thresholds apply even to empty partitions; report them as given.
  report.delta_plus_used = delta_plus;
  report.delta_minus_used = delta_minus;
  return report;
}

DropoutReport apply_dropout(const DropoutConfig& config,
                            std::span<const int> indices,
                            const ConstVectorRef& phi) {
  config.validate();
  switch (config.mode) {
    case DropoutMode::kOff:
      return keep_everything(indices);
    case DropoutMode::kRatio:
      return apply_ratio_dropout(indices, phi, config.ratio);
    case DropoutMode::kThreshold:
      return apply_threshold_dropout(indices, phi, config.delta_plus,
                                     config.delta_minus);
  }
  throw InputError("apply_dropout: unknown mode");
}

std::string to_string(DropoutMode mode) {
  switch (mode) {
    case DropoutMode::kRatio: return "ratio";
    case DropoutMode::kThreshold: return "threshold";
    case DropoutMode::kOff: return "off";
  }
  return "?";
}

DropoutMode dropout_mode_from_string(const std::string& text) {
  if (text == "ratio") return DropoutMode::kRatio;
  if (text == "threshold") return DropoutMode::kThreshold;
  if (text == "off") return DropoutMode::kOff;
  throw ConfigError("dropout: unknown mode '" + text +
                    "' (expected ratio, threshold or off)");
}

}  // namespace dppo
