#ifndef DPPO_METRICS_HPP_
#define DPPO_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dppo/types.hpp"

namespace dppo {

// One metrics row, emitted per training epoch.
struct UpdateRecord {
  std::int64_t global_step = 0;
  int update_index = 0;
  int epoch_index = 0;
  std::optional<double> mean_return;  // empty until an episode completes
  double surrogate_variance = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int kept_count = 0;
  std::optional<double> dropped_phi_pos_mean;
  std::optional<double> dropped_phi_neg_mean;
  double lr = 0.0;
};

// Shortest round-trip decimal form; the same value always prints the same.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

// metrics.csv column order is fixed; absent statistics serialize as empty
// fields.
extern const char* const kMetricsHeader;

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);

  void write(const UpdateRecord& record);

 private:
  std::ofstream stream_;
};

// Parsed metrics.csv; empty cells become nullopt.
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  int column_index(const std::string& name) const;
  // All non-empty values of one column.
  std::vector<double> column_values(const std::string& name) const;
};

MetricsTable read_metrics_csv(const std::filesystem::path& path);

}  // namespace dppo

#endif  // DPPO_METRICS_HPP_
