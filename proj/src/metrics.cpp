#include "dppo/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace dppo {

const char* const kMetricsHeader =
    "global_step,update,epoch,mean_return,surrogate_variance,policy_loss,"
    "value_loss,entropy,kept_count,dropped_phi_pos_mean,dropped_phi_neg_mean,lr";

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string format_optional(const std::optional<double>& value) {
  return value.has_value() ? format_double(*value) : std::string();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path)
    : stream_(path, std::ios::trunc) {
  if (!stream_)
    throw Error("metrics: cannot open '" + path.string() + "' for writing");
  stream_ << kMetricsHeader << "\n";
  stream_.flush();
}

void MetricsWriter::write(const UpdateRecord& r) {
  stream_ << r.global_step << ',' << r.update_index << ',' << r.epoch_index << ','
          << format_optional(r.mean_return) << ','
          << format_double(r.surrogate_variance) << ','
          << format_double(r.policy_loss) << ',' << format_double(r.value_loss)
          << ',' << format_double(r.entropy) << ',' << r.kept_count << ','
          << format_optional(r.dropped_phi_pos_mean) << ','
          << format_optional(r.dropped_phi_neg_mean) << ',' << format_double(r.lr)
          << "\n";
  stream_.flush();
  if (!stream_) throw Error("metrics: write failed");
}

int MetricsTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw InputError("metrics: no column named '" + name + "'");
}

std::vector<double> MetricsTable::column_values(const std::string& name) const {
  const int index = column_index(name);
  std::vector<double> values;
  values.reserve(rows.size());
  for (const auto& row : rows) {
    const auto& cell = row[static_cast<std::size_t>(index)];
    if (cell.has_value()) values.push_back(*cell);
  }
  return values;
}

MetricsTable read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream stream(path);
  if (!stream) throw InputError("metrics: cannot open '" + path.string() + "'");

  MetricsTable table;
  std::string line;
  if (!std::getline(stream, line))
    throw FormatError("metrics: '" + path.string() + "' is empty");
  {
    std::istringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  }

  std::size_t line_number = 1;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (cell.empty()) {
        row.push_back(std::nullopt);
      } else {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw FormatError("metrics: bad number '" + cell + "' on line " +
                            std::to_string(line_number));
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != table.columns.size())
      throw FormatError("metrics: line " + std::to_string(line_number) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(table.columns.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dppo
