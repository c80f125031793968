#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace srhc {

// RFC-4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

// Shortest stable decimal rendering used in every CSV and report (%.12g).
std::string fmt(double v);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

// Static SVG line chart with axes, ticks and a legend.
void write_svg_chart(std::ostream& os, const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace srhc
