#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "adaknn/experiment.hpp"

namespace adaknn {

// Minimal log-log scatter plot with the fitted slope line. No plotting
// dependency; plain SVG primitives.
inline void write_rate_report_svg(const std::string& path, const RateReport& report,
                                  const std::string& title = "rate experiment") {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("write_rate_report_svg: cannot open " + path);

  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  std::vector<std::pair<double, double>> pts;  // (ln n, ln mse)
  for (const RatePoint& pt : report.points)
    if (pt.mse > 0.0) pts.emplace_back(std::log(static_cast<double>(pt.n)), std::log(pt.mse));

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  if (pts.size() >= 2) {
    double xmin = pts[0].first, xmax = pts[0].first, ymin = pts[0].second, ymax = pts[0].second;
    for (const auto& [x, y] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    const double ypad = 0.08 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto sy = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    out << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
        << height - mb << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
        << "' stroke='black'/>\n";
    out << "<text x='" << width / 2 << "' y='" << height - 12
        << "' text-anchor='middle' font-size='12'>ln n</text>\n";
    out << "<text x='18' y='" << height / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 18 " << height / 2
        << ")'>ln mse</text>\n";

    if (report.slope.has_value()) {
      // least-squares line through the plotted points
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
      }
      mx /= static_cast<double>(pts.size());
      my /= static_cast<double>(pts.size());
      const double b = *report.slope;
      const double a = my - b * mx;
      out << "<line x1='" << sx(xmin) << "' y1='" << sy(a + b * xmin) << "' x2='" << sx(xmax)
          << "' y2='" << sy(a + b * xmax) << "' stroke='#c33' stroke-width='1.5'/>\n";
      out << "<text x='" << width - mr - 8 << "' y='" << mt + 16
          << "' text-anchor='end' font-size='12' fill='#c33'>slope " << *report.slope
          << "</text>\n";
    }

    for (const auto& [x, y] : pts)
      out << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='4' fill='#226'/>\n";
  } else {
    out << "<text x='" << width / 2 << "' y='" << height / 2
        << "' text-anchor='middle' font-size='13'>" << report.status << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace adaknn
