#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qecclab/report.hpp"

namespace qecclab {

struct PlotOptions {
  std::string metric = "ler";  // "ler" or "ber"
  std::string title = "logical error rate vs physical error rate";
  std::optional<double> threshold_marker;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace detail

/// Deterministic SVG rendering of LER/BER curves: one polyline per
/// (decoder, L) report, log-scale y, fixed canvas, fixed ids, no timestamps.
/// Identical inputs produce byte-identical documents.
inline std::string render_curves(const std::vector<DecodeReport>& reports,
                                 const PlotOptions& opts = {}) {
  if (reports.empty()) throw std::invalid_argument("render_curves: no input curves");
  const double width = 800, height = 560;
  const double ml = 70, mr = 170, mt = 40, mb = 50;
  const double px = width - ml - mr, py = height - mt - mb;

  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  auto metric_of = [&](const EvalPoint& pt) { return opts.metric == "ber" ? pt.ber() : pt.ler(); };
  for (const auto& r : reports)
    for (const auto& pt : r.points) {
      x_min = std::min(x_min, pt.p);
      x_max = std::max(x_max, pt.p);
      double m = metric_of(pt);
      if (m > 0) {
        y_min = std::min(y_min, m);
        y_max = std::max(y_max, m);
      }
    }
  if (x_max <= x_min) {
    x_min -= 0.01;
    x_max += 0.01;
  }
  if (y_max <= 0) {
    y_min = 1e-4;
    y_max = 1.0;
  }
  double ly_min = std::floor(std::log10(y_min));
  double ly_max = std::ceil(std::log10(y_max));
  if (ly_max <= ly_min) ly_max = ly_min + 1;

  auto xpos = [&](double p) { return ml + (p - x_min) / (x_max - x_min) * px; };
  auto ypos = [&](double m) {
    double ly = std::log10(std::max(m, std::pow(10.0, ly_min)));
    return mt + (ly_max - ly) / (ly_max - ly_min) * py;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"560\" "
        "font-family=\"monospace\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"560\" fill=\"white\"/>\n";
  os << "<text id=\"title\" x=\"" << detail::svg_num(ml) << "\" y=\"24\" font-size=\"14\">"
     << opts.title << "</text>\n";
  os << "<rect id=\"frame\" x=\"" << detail::svg_num(ml) << "\" y=\"" << detail::svg_num(mt)
     << "\" width=\"" << detail::svg_num(px) << "\" height=\"" << detail::svg_num(py)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // log-decade gridlines and y labels
  for (int d = static_cast<int>(ly_min); d <= static_cast<int>(ly_max); ++d) {
    double y = ypos(std::pow(10.0, d));
    os << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(y) << "\" x2=\""
       << detail::svg_num(ml + px) << "\" y2=\"" << detail::svg_num(y)
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"8\" y=\"" << detail::svg_num(y + 4) << "\">1e" << d << "</text>\n";
  }
  // x ticks at the data extremes and midpoint
  for (double p : {x_min, 0.5 * (x_min + x_max), x_max}) {
    double x = xpos(p);
    os << "<line x1=\"" << detail::svg_num(x) << "\" y1=\"" << detail::svg_num(mt + py)
       << "\" x2=\"" << detail::svg_num(x) << "\" y2=\"" << detail::svg_num(mt + py + 5)
       << "\" stroke=\"black\"/>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%.4g", p);
    os << "<text x=\"" << detail::svg_num(x - 12) << "\" y=\"" << detail::svg_num(mt + py + 20)
       << "\">" << label << "</text>\n";
  }
  os << "<text x=\"" << detail::svg_num(ml + px / 2 - 60) << "\" y=\""
     << detail::svg_num(height - 10) << "\">physical error rate p</text>\n";

  if (opts.threshold_marker) {
    double x = xpos(*opts.threshold_marker);
    os << "<line id=\"threshold\" x1=\"" << detail::svg_num(x) << "\" y1=\""
       << detail::svg_num(mt) << "\" x2=\"" << detail::svg_num(x) << "\" y2=\""
       << detail::svg_num(mt + py) << "\" stroke=\"#888888\" stroke-dasharray=\"4,3\"/>\n";
  }

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::vector<EvalPoint> pts = r.points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    std::ostringstream coords;
    for (const auto& pt : pts) {
      double m = metric_of(pt);
      coords << detail::svg_num(xpos(pt.p)) << ',' << detail::svg_num(ypos(m)) << ' ';
    }
    const char* color = detail::kPalette[i % 8];
    os << "<polyline id=\"curve-" << i << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"" << coords.str() << "\"/>\n";
    for (const auto& pt : pts)
      os << "<circle cx=\"" << detail::svg_num(xpos(pt.p)) << "\" cy=\""
         << detail::svg_num(ypos(metric_of(pt))) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    double ly = mt + 16 + 16 * static_cast<double>(i);
    os << "<line x1=\"" << detail::svg_num(ml + px + 10) << "\" y1=\"" << detail::svg_num(ly - 4)
       << "\" x2=\"" << detail::svg_num(ml + px + 30) << "\" y2=\"" << detail::svg_num(ly - 4)
       << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << detail::svg_num(ml + px + 35) << "\" y=\"" << detail::svg_num(ly) << "\">"
       << r.decoder << " L=" << r.L << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qecclab
