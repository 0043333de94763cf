#pragma once

// Minimal SVG line/scatter plotting: enough for metric curves, sweep
// scatters and toy-task frames.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace uqstream::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
  bool points = false;  // scatter markers instead of a polyline
  double radius = 2.5;
  double opacity = 1.0;
};

/// Filled band between lower and upper curves sharing x.
struct Band {
  std::string color;
  std::vector<double> x, lower, upper;
  double opacity = 0.25;
};

struct Panel {
  std::string title;
  std::string x_label, y_label;
  std::vector<Series> series;
  std::vector<Band> bands;
  std::optional<double> y_min, y_max, x_min, x_max;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

inline std::string render_panel(const Panel& p, double ox, double oy, double w, double h) {
  Range xr, yr;
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& b : p.bands) {
    for (double v : b.x) xr.add(v);
    for (double v : b.lower) yr.add(v);
    for (double v : b.upper) yr.add(v);
  }
  xr.finish();
  yr.finish();
  if (p.x_min) xr.lo = *p.x_min;
  if (p.x_max) xr.hi = *p.x_max;
  if (p.y_min) yr.lo = *p.y_min;
  if (p.y_max) yr.hi = *p.y_max;

  const double ml = 60, mr = 15, mt = 28, mb = 40;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto sx = [&](double v) { return ox + ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double v) {
    v = std::clamp(v, yr.lo, yr.hi);
    return oy + mt + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph;
  };

  std::string out;
  out += "<g>\n";
  out += "<rect x=\"" + fmt(ox + ml) + "\" y=\"" + fmt(oy + mt) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  out += "<text x=\"" + fmt(ox + ml + pw / 2) + "\" y=\"" + fmt(oy + 18) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + escape(p.title) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out += "<text x=\"" + fmt(sx(xv)) + "\" y=\"" + fmt(oy + mt + ph + 14) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + fmt(xv) + "</text>\n";
    out += "<text x=\"" + fmt(ox + ml - 4) + "\" y=\"" + fmt(sy(yv) + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + fmt(yv) + "</text>\n";
  }
  out += "<text x=\"" + fmt(ox + ml + pw / 2) + "\" y=\"" + fmt(oy + h - 6) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + escape(p.x_label) + "</text>\n";
  out += "<text transform=\"translate(" + fmt(ox + 12) + "," + fmt(oy + mt + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" + escape(p.y_label) + "</text>\n";

  for (const auto& b : p.bands) {
    std::string pts;
    for (std::size_t i = 0; i < b.x.size(); ++i) pts += fmt(sx(b.x[i])) + "," + fmt(sy(b.upper[i])) + " ";
    for (std::size_t i = b.x.size(); i-- > 0;) pts += fmt(sx(b.x[i])) + "," + fmt(sy(b.lower[i])) + " ";
    out += "<polygon points=\"" + pts + "\" fill=\"" + b.color + "\" fill-opacity=\"" + fmt(b.opacity) +
           "\" stroke=\"none\"/>\n";
  }
  double legend_y = oy + mt + 12;
  for (const auto& s : p.series) {
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += "<circle cx=\"" + fmt(sx(s.x[i])) + "\" cy=\"" + fmt(sy(s.y[i])) + "\" r=\"" + fmt(s.radius) +
               "\" fill=\"" + s.color + "\" fill-opacity=\"" + fmt(s.opacity) + "\"/>\n";
      }
    } else {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) pts += fmt(sx(s.x[i])) + "," + fmt(sy(s.y[i])) + " ";
      out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.5\" stroke-opacity=\"" + fmt(s.opacity) + "\"/>\n";
    }
    if (!s.label.empty()) {
      out += "<rect x=\"" + fmt(ox + ml + pw - 120) + "\" y=\"" + fmt(legend_y - 8) +
             "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
      out += "<text x=\"" + fmt(ox + ml + pw - 105) + "\" y=\"" + fmt(legend_y + 1) + "\" font-size=\"10\">" +
             escape(s.label) + "</text>\n";
      legend_y += 13;
    }
  }
  out += "</g>\n";
  return out;
}

}  // namespace detail

/// Panels laid out in a grid with `columns` columns.
inline std::string render(const std::vector<Panel>& panels, std::size_t columns = 1, double panel_w = 640,
                          double panel_h = 300) {
  columns = std::max<std::size_t>(1, columns);
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double w = panel_w * static_cast<double>(columns);
  const double h = panel_h * static_cast<double>(std::max<std::size_t>(rows, 1));
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
                    "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double ox = panel_w * static_cast<double>(i % columns);
    const double oy = panel_h * static_cast<double>(i / columns);
    out += detail::render_panel(panels[i], ox, oy, panel_w, panel_h);
  }
  out += "</svg>\n";
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> p{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return p;
}

}  // namespace uqstream::svg
