#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pixelgame {

struct BarSeries {
  std::string name;
  std::vector<double> values;  // one per category
};

struct ChartSpec {
  std::string title;
  std::vector<std::string> categories;
  int width = 640;
  int height = 400;
};

/// Grouped vertical bars: one group per category, one bar per series.
void write_bar_chart(const std::filesystem::path& path, const ChartSpec& chart,
                     const std::vector<BarSeries>& series);

/// Polyline through (x[i], y[i]); categories are ignored.
void write_line_chart(const std::filesystem::path& path, const ChartSpec& chart,
                      const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pixelgame
