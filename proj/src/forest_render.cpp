#include "ipdmeta/forest_render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ipdmeta {

namespace {

std::string fixed(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

struct Axis {
  double lo, hi;
};

// Plot range: all CIs plus the zero line, with 5% padding.
Axis axis_range(const ForestData& f) {
  double lo = std::min(f.diamond.ci_low, 0.0);
  double hi = std::max(f.diamond.ci_high, 0.0);
  for (const auto& r : f.rows) {
    lo = std::min(lo, r.ci_low);
    hi = std::max(hi, r.ci_high);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  return {lo - 0.05 * span, hi + 0.05 * span};
}

}  // namespace

std::string render_forest_text(const ForestData& forest) {
  constexpr int axis_width = 41;
  std::size_t label_width = 6;  // "pooled"
  for (const auto& r : forest.rows) label_width = std::max(label_width, r.label.size());

  const Axis ax = axis_range(forest);
  const auto column = [&](double v) {
    const double t = (v - ax.lo) / (ax.hi - ax.lo);
    const int c = static_cast<int>(std::lround(t * (axis_width - 1)));
    return std::clamp(c, 0, axis_width - 1);
  };
  const auto bar = [&](double est, double ci_lo, double ci_hi, char marker) {
    std::string axis(axis_width, ' ');
    axis[column(0.0)] = '|';
    for (int c = column(ci_lo); c <= column(ci_hi); ++c) {
      axis[c] = axis[c] == '|' ? '+' : '-';
    }
    axis[column(est)] = marker;
    return axis;
  };
  const auto row_text = [&](const ForestRow& r, const std::string& weight, char marker) {
    std::string line = r.label;
    line.resize(label_width, ' ');
    std::string ci =
        fixed(r.estimate, 3) + " [" + fixed(r.ci_low, 3) + ", " + fixed(r.ci_high, 3) + "]";
    ci.resize(26, ' ');
    std::string w = weight;
    while (w.size() < 6) w.insert(w.begin(), ' ');
    return line + "  " + ci + w + "  " + bar(r.estimate, r.ci_low, r.ci_high, marker);
  };

  std::ostringstream out;
  std::string head(label_width, ' ');
  out << head << "  estimate [95% CI]         weight\n";
  for (const auto& r : forest.rows) {
    out << row_text(r, fixed(r.weight_pct, 1) + "%", '#') << '\n';
  }
  out << row_text(forest.diamond, "100.0%", '*') << '\n';
  out << head << "  axis " << fixed(ax.lo, 3) << " to " << fixed(ax.hi, 3)
      << "; '|' marks 0\n";
  return out.str();
}

std::string render_forest_svg(const ForestData& forest) {
  constexpr double width = 760.0, row_h = 26.0, margin_l = 150.0, margin_r = 30.0;
  constexpr double top = 40.0;
  const double plot_w = width - margin_l - margin_r;
  const double height = top + row_h * (static_cast<double>(forest.rows.size()) + 2.5);

  const Axis ax = axis_range(forest);
  const auto sx = [&](double v) { return margin_l + (v - ax.lo) / (ax.hi - ax.lo) * plot_w; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0)
      << "\" height=\"" << fixed(height, 0)
      << "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << fixed(sx(0.0), 2) << "\" y1=\"" << fixed(top - 10.0, 2) << "\" x2=\""
      << fixed(sx(0.0), 2) << "\" y2=\""
      << fixed(top + row_h * (static_cast<double>(forest.rows.size()) + 1.0), 2)
      << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  double y = top;
  for (const auto& r : forest.rows) {
    const double cy = y + row_h / 2.0;
    svg << "<text x=\"8\" y=\"" << fixed(cy + 4.0, 2) << "\">" << r.label << "</text>\n";
    svg << "<line x1=\"" << fixed(sx(r.ci_low), 2) << "\" y1=\"" << fixed(cy, 2) << "\" x2=\""
        << fixed(sx(r.ci_high), 2) << "\" y2=\"" << fixed(cy, 2) << "\" stroke=\"black\"/>\n";
    // Square area proportional to weight share.
    const double side = 4.0 + 14.0 * std::sqrt(r.weight_pct / 100.0);
    svg << "<rect x=\"" << fixed(sx(r.estimate) - side / 2.0, 2) << "\" y=\""
        << fixed(cy - side / 2.0, 2) << "\" width=\"" << fixed(side, 2) << "\" height=\""
        << fixed(side, 2) << "\" fill=\"#2a6099\"/>\n";
    y += row_h;
  }

  const double cy = y + row_h / 2.0;
  svg << "<text x=\"8\" y=\"" << fixed(cy + 4.0, 2) << "\">" << forest.diamond.label
      << "</text>\n";
  svg << "<polygon points=\"" << fixed(sx(forest.diamond.ci_low), 2) << ',' << fixed(cy, 2)
      << ' ' << fixed(sx(forest.diamond.estimate), 2) << ',' << fixed(cy - 8.0, 2) << ' '
      << fixed(sx(forest.diamond.ci_high), 2) << ',' << fixed(cy, 2) << ' '
      << fixed(sx(forest.diamond.estimate), 2) << ',' << fixed(cy + 8.0, 2)
      << "\" fill=\"#444444\"/>\n";

  const double ay = cy + row_h;
  svg << "<text x=\"" << fixed(margin_l, 2) << "\" y=\"" << fixed(ay, 2) << "\">"
      << fixed(ax.lo, 2) << "</text>\n";
  svg << "<text x=\"" << fixed(sx(0.0) - 4.0, 2) << "\" y=\"" << fixed(ay, 2)
      << "\">0</text>\n";
  svg << "<text x=\"" << fixed(width - margin_r - 40.0, 2) << "\" y=\"" << fixed(ay, 2)
      << "\">" << fixed(ax.hi, 2) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ipdmeta
