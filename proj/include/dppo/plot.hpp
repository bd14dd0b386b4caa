#ifndef DPPO_PLOT_HPP_
#define DPPO_PLOT_HPP_

#include <filesystem>
#include <string>
#include <vector>

namespace dppo {

// Static SVG line chart. Output depends only on the inputs, so re-running on
// the same data is byte-identical.
void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<double>& x,
                          const std::vector<double>& y);

// Emits return_curve.svg and surrogate_variance_curve.svg from a metrics.csv.
void plot_metrics(const std::filesystem::path& metrics_path,
                  const std::filesystem::path& out_dir);

}  // namespace dppo

#endif  // DPPO_PLOT_HPP_
