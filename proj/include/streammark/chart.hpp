#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streammark/metrics.hpp"

namespace streammark {

struct ChartSeries {
  std::string group;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

struct ChartOptions {
  int width = 640;
  int height = 400;
  int margin = 40;
  std::string title;
};

// Static SVG text with one polyline per series; byte-deterministic for
// identical input (fixed layout, fixed number formatting).
std::string render_line_chart(std::span<const ChartSeries> series,
                              const ChartOptions& opt = {});

// Box-and-whisker panel from summaries, one box per label.
std::string render_box_plot(
    std::span<const std::pair<std::string, DistributionSummary>> boxes,
    const ChartOptions& opt = {});

}  // namespace streammark
