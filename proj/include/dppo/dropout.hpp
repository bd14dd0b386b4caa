#ifndef DPPO_DROPOUT_HPP_
#define DPPO_DROPOUT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dppo/types.hpp"

namespace dppo {

enum class DropoutMode { kRatio, kThreshold, kOff };

struct DropoutConfig {
  DropoutMode mode = DropoutMode::kRatio;
  double ratio = 0.2;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  // Skip the (unused) dropout pass after an update's final epoch.
  bool skip_final = false;

  void validate() const;
};

// Outcome of one dropout application.
struct DropoutReport {
  std::vector<int> kept_indices;  // subset of the input, input order
  std::optional<double> delta_plus_used;
  std::optional<double> delta_minus_used;
  std::optional<double> dropped_phi_pos_mean;
  std::optional<double> dropped_phi_neg_mean;
  int kept_count = 0;
  int dropped_count = 0;
};

// phi_i = O_i * sum(O) - O_i^2, i.e. sum_{j != i} O_i * O_j, computed in
// O(n) with a fixed-order sum.
Vector phi_values(const ConstVectorRef& surrogates);

// Splits positions by sign of phi; phi = 0 belongs to the plus side.
struct SignPartition {
  std::vector<int> plus;   // phi >= 0
  std::vector<int> minus;  // phi < 0
};
SignPartition partition(std::span<const int> indices, const ConstVectorRef& phi);

// The element m of M whose fraction of strictly-smaller elements is closest
// to r; ties broken toward the smaller m.
double quantile_select(std::vector<double> values, double r);

// Keeps, within each sign partition, the samples with phi strictly above that
// partition's r-quantile. r = 0 keeps everything. A partition whose phi
// values are all equal is kept intact (quantile dropout of a constant set
// would discard it entirely); the multi-element case logs a warning.
DropoutReport apply_ratio_dropout(std::span<const int> indices,
                                  const ConstVectorRef& phi, double r);

// Keeps {phi > delta_plus} on the plus side and {phi > delta_minus} on the
// minus side.
DropoutReport apply_threshold_dropout(std::span<const int> indices,
                                      const ConstVectorRef& phi,
                                      double delta_plus, double delta_minus);

// Dispatch on config.mode; kOff keeps everything.
DropoutReport apply_dropout(const DropoutConfig& config,
                            std::span<const int> indices,
                            const ConstVectorRef& phi);

std::string to_string(DropoutMode mode);
DropoutMode dropout_mode_from_string(const std::string& text);

}  // namespace dppo

#endif  // DPPO_DROPOUT_HPP_
