#include "dppo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dppo/metrics.hpp"
#include "dppo/types.hpp"

namespace dppo {

namespace {

constexpr double kWidth = 860.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 78.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 44.0;
constexpr double kMarginBottom = 56.0;
constexpr int kTicks = 5;

std::string number(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", v);
  return buffer;
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<double>& x,
                          const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("plot: x/y size mismatch");

  std::ofstream svg(path, std::ios::trunc);
  if (!svg) throw Error("plot: cannot open '" + path.string() + "' for writing");

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  if (!x.empty()) {
    x_min = *std::min_element(x.begin(), x.end());
    x_max = *std::max_element(x.begin(), x.end());
    y_min = *std::min_element(y.begin(), y.end());
    y_max = *std::max_element(y.begin(), y.end());
    if (x_min == x_max) { x_min -= 0.5; x_max += 0.5; }
    if (y_min == y_max) { y_min -= 0.5; y_max += 0.5; }
  }

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto sx = [&](double v) {
    return kMarginLeft + (v - x_min) / (x_max - x_min) * plot_w;
  };
  const auto sy = [&](double v) {
    return kMarginTop + plot_h - (v - y_min) / (y_max - y_min) * plot_h;
  };

  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"26\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";

  for (int t = 0; t <= kTicks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / kTicks;
    const double fy = y_min + (y_max - y_min) * t / kTicks;
    const double px = sx(fx);
    const double py = sy(fy);
    svg << "<line x1=\"" << px << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << px << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << number(fx) << "</text>\n"
        << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << py << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << number(fy) << "</text>\n"
        << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << py
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }

  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  if (x.empty()) {
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\" fill=\"#888888\">no data</text>\n";
  } else {
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
           "points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i > 0) svg << " ";
      svg << number(sx(x[i])) << "," << number(sy(y[i]));
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  if (!svg) throw Error("plot: write failed");
}

void plot_metrics(const std::filesystem::path& metrics_path,
                  const std::filesystem::path& out_dir) {
  const MetricsTable table = read_metrics_csv(metrics_path);
  std::filesystem::create_directories(out_dir);

  const int step_col = table.column_index("global_step");
  const auto series = [&table, step_col](const std::string& name) {
    const int col = table.column_index(name);
    std::pair<std::vector<double>, std::vector<double>> xy;
    for (const auto& row : table.rows) {
      const auto& step = row[static_cast<std::size_t>(step_col)];
      const auto& value = row[static_cast<std::size_t>(col)];
      if (step.has_value() && value.has_value()) {
        xy.first.push_back(*step);
        xy.second.push_back(*value);
      }
    }
    return xy;
  };

  const auto returns = series("mean_return");
  write_line_chart_svg(out_dir / "return_curve.svg", "Rolling mean return",
                       "environment steps", "return", returns.first,
                       returns.second);
  const auto variance = series("surrogate_variance");
  write_line_chart_svg(out_dir / "surrogate_variance_curve.svg",
                       "Surrogate objective variance", "environment steps",
                       "variance", variance.first, variance.second);
}

}  // namespace dppo
