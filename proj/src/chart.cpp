#include "streammark/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace streammark {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string svg_header(const ChartOptions& opt) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
       std::to_string(opt.width) + "\" height=\"" + std::to_string(opt.height) +
       "\" viewBox=\"0 0 " + std::to_string(opt.width) + " " +
       std::to_string(opt.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    s += "<text x=\"" + std::to_string(opt.width / 2) +
         "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"monospace\">" +
         opt.title + "</text>\n";
  return s;
}

}  // namespace

std::string render_line_chart(std::span<const ChartSeries> series,
                              const ChartOptions& opt) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double m = opt.margin;
  const double w = opt.width - 2 * m;
  const double h = opt.height - 2 * m;
  auto px = [&](double x) { return m + (x - xmin) / (xmax - xmin) * w; };
  auto py = [&](double y) { return opt.height - m - (y - ymin) / (ymax - ymin) * h; };

  std::string svg = svg_header(opt);
  svg += "<rect x=\"" + num(m) + "\" y=\"" + num(m) + "\" width=\"" + num(w) +
         "\" height=\"" + num(h) + "\" fill=\"none\" stroke=\"#999\"/>\n";
  size_t ci = 0;
  for (const auto& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += kPalette[ci % 8];
    svg += "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.points.size(); ++i) {
      if (i) svg.push_back(' ');
      svg += num(px(s.points[i].first)) + "," + num(py(s.points[i].second));
    }
    svg += "\"/>\n";
    svg += "<text x=\"" + num(m + 4) + "\" y=\"" + num(m + 14 + 14 * static_cast<double>(ci)) +
           "\" font-size=\"11\" font-family=\"monospace\" fill=\"";
    svg += kPalette[ci % 8];
    svg += "\">" + s.group + "</text>\n";
    ++ci;
  }
  svg += "<text x=\"" + num(m) + "\" y=\"" + num(opt.height - 8.0) +
         "\" font-size=\"10\" font-family=\"monospace\">" + num(xmin) + " .. " +
         num(xmax) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string render_box_plot(
    std::span<const std::pair<std::string, DistributionSummary>> boxes,
    const ChartOptions& opt) {
  double ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& [label, s] : boxes) {
    if (s.count == 0) continue;
    if (first) {
      ymin = s.min;
      ymax = s.max;
      first = false;
    }
    ymin = std::min(ymin, s.min);
    ymax = std::max(ymax, s.max);
  }
  if (ymax == ymin) ymax = ymin + 1;

  const double m = opt.margin;
  const double h = opt.height - 2 * m;
  auto py = [&](double y) { return opt.height - m - (y - ymin) / (ymax - ymin) * h; };
  const double slot = (opt.width - 2 * m) / std::max<size_t>(1, boxes.size());

  std::string svg = svg_header(opt);
  size_t i = 0;
  for (const auto& [label, s] : boxes) {
    const double cx = m + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.4;
    if (s.count > 0) {
      svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(py(s.min)) + "\" x2=\"" +
             num(cx) + "\" y2=\"" + num(py(s.max)) + "\" stroke=\"#333\"/>\n";
      svg += "<rect x=\"" + num(cx - bw / 2) + "\" y=\"" + num(py(s.q3)) +
             "\" width=\"" + num(bw) + "\" height=\"" +
             num(std::max(0.5, py(s.q1) - py(s.q3))) +
             "\" fill=\"#9ecae1\" stroke=\"#333\"/>\n";
      svg += "<line x1=\"" + num(cx - bw / 2) + "\" y1=\"" + num(py(s.median)) +
             "\" x2=\"" + num(cx + bw / 2) + "\" y2=\"" + num(py(s.median)) +
             "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
    }
    svg += "<text x=\"" + num(cx) + "\" y=\"" + num(opt.height - m + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\" "
           "font-family=\"monospace\">" +
           label + "</text>\n";
    ++i;
  }
  svg += "<text x=\"4\" y=\"" + num(py(ymax) + 4) +
         "\" font-size=\"10\" font-family=\"monospace\">" + num(ymax) + "</text>\n";
  svg += "<text x=\"4\" y=\"" + num(py(ymin)) +
         "\" font-size=\"10\" font-family=\"monospace\">" + num(ymin) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace streammark
