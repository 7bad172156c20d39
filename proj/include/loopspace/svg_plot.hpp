#pragma once

#include <string>
#include <vector>

namespace loopspace {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Static line chart; log axes drop non-positive points.
struct SvgChart {
  std::string file;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<SvgSeries> series;
};

std::string render_svg(const SvgChart& chart);

} // namespace loopspace
