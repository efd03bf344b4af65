#include "dyntta/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace dyntta::io {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#4363d8", "#e6194b", "#3cb44b", "#f58231", "#911eb4", "#46f0f0",
                          "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff", "#9a6324",
                          "#800000", "#aaffc3", "#808000", "#000075"};

}  // namespace

std::string severity_curves_svg(const train::EvalReport& report) {
  std::map<corrupt::CorruptionKind, std::map<int, double>> series;
  for (const auto& cell : report.cells) series[cell.kind][cell.severity] = cell.accuracy;

  const double width = 640, height = 420;
  const double x0 = 70, y0 = 40, plot_w = width - 260, plot_h = height - 100;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << x0 << "\" y=\"20\" font-size=\"14\">accuracy by severity</text>\n";

  // axes and grid
  for (int a = 0; a <= 10; ++a) {
    const double acc = a / 10.0;
    const double y = y0 + plot_h * (1.0 - acc);
    os << "<line x1=\"" << x0 << "\" y1=\"" << num(y) << "\" x2=\"" << x0 + plot_w << "\" y2=\""
       << num(y) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << x0 - 35 << "\" y=\"" << num(y + 4) << "\">" << num(acc) << "</text>\n";
  }
  for (int s = 1; s <= 5; ++s) {
    const double x = x0 + plot_w * (s - 1) / 4.0;
    os << "<text x=\"" << num(x - 3) << "\" y=\"" << num(y0 + plot_h + 18) << "\">" << s
       << "</text>\n";
  }
  os << "<text x=\"" << num(x0 + plot_w / 2 - 20) << "\" y=\"" << num(y0 + plot_h + 36)
     << "\">severity</text>\n";

  int color = 0;
  for (const auto& [kind, points] : series) {
    std::ostringstream pts;
    for (const auto& [severity, acc] : points) {
      const double x = x0 + plot_w * (severity - 1) / 4.0;
      const double y = y0 + plot_h * (1.0 - acc);
      pts << num(x) << "," << num(y) << " ";
    }
    const char* c = kPalette[color % 16];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\""
       << pts.str() << "\"/>\n";
    os << "<text x=\"" << num(x0 + plot_w + 12) << "\" y=\"" << num(y0 + 14 + 16 * color)
       << "\" fill=\"" << c << "\">" << corrupt::kind_name(kind) << "</text>\n";
    ++color;
  }
  os << "</svg>\n";
  return os.str();
}

std::string weight_boxplot_svg(const est::WeightStats& stats) {
  const size_t n = stats.group_names.size();
  const double box_w = 26, gap = 16;
  const double width = 90 + n * (box_w + gap), height = 380;
  const double x0 = 60, y0 = 30, plot_h = 250;
  double max_val = 1e-6;
  for (const auto& s : stats.group_weights) max_val = std::max(max_val, double(s.max));
  max_val = std::min(1.0, max_val * 1.15);

  auto ypos = [&](double v) { return y0 + plot_h * (1.0 - v / max_val); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << x0 << "\" y=\"16\" font-size=\"13\">blend weights by augmentation</text>\n";
  for (int a = 0; a <= 4; ++a) {
    const double v = max_val * a / 4.0;
    os << "<line x1=\"" << x0 << "\" y1=\"" << num(ypos(v)) << "\" x2=\"" << width - 20
       << "\" y2=\"" << num(ypos(v)) << "\" stroke=\"#e5e5e5\"/>\n";
    char lab[16];
    std::snprintf(lab, sizeof(lab), "%.3f", v);
    os << "<text x=\"" << x0 - 44 << "\" y=\"" << num(ypos(v) + 3) << "\">" << lab << "</text>\n";
  }

  for (size_t i = 0; i < n; ++i) {
    const est::SummaryStats& s = stats.group_weights[i];
    const double cx = x0 + 20 + i * (box_w + gap) + box_w / 2;
    const double left = cx - box_w / 2, right = cx + box_w / 2;
    os << "<g class=\"box\">\n";
    // whiskers
    os << "  <line x1=\"" << num(cx) << "\" y1=\"" << num(ypos(s.min)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(ypos(s.q1)) << "\" stroke=\"#333\"/>\n";
    os << "  <line x1=\"" << num(cx) << "\" y1=\"" << num(ypos(s.q3)) << "\" x2=\"" << num(cx)
       << "\" y2=\"" << num(ypos(s.max)) << "\" stroke=\"#333\"/>\n";
    // box
    os << "  <rect x=\"" << num(left) << "\" y=\"" << num(ypos(s.q3)) << "\" width=\""
       << num(box_w) << "\" height=\"" << num(std::max(0.5, ypos(s.q1) - ypos(s.q3)))
       << "\" fill=\"#9ecae1\" stroke=\"#333\"/>\n";
    // median
    os << "  <line x1=\"" << num(left) << "\" y1=\"" << num(ypos(s.median)) << "\" x2=\""
       << num(right) << "\" y2=\"" << num(ypos(s.median))
       << "\" stroke=\"#08306b\" stroke-width=\"1.5\"/>\n";
    os << "</g>\n";
    os << "<text x=\"" << num(cx + 3) << "\" y=\"" << num(y0 + plot_h + 8)
       << "\" transform=\"rotate(60 " << num(cx + 3) << " " << num(y0 + plot_h + 8) << ")\">"
       << stats.group_names[i] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dyntta::io
