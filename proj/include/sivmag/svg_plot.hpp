#pragma once

// Minimal SVG line plot: one frame, linear axes with "nice" ticks, up to a
// handful of series. Output only; nothing numeric depends on it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sivmag/error.hpp"

namespace sivmag::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Tick positions at 1/2/5 x 10^k covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step);
  for (int i = 0;; ++i) {
    const double t = (first + i) * step;
    if (t > hi + 1e-9 * step) break;
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

inline std::string format_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
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

class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  LinePlot& add(Series s) {
    if (s.x.size() != s.y.size()) throw InvalidArgument("series x and y lengths differ");
    series_.push_back(std::move(s));
    return *this;
  }

  std::string render(int width = 640, int height = 420) const {
    constexpr double left = 70, right = 20, top = 40, bottom = 55;
    const double pw = width - left - right;
    const double ph = height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"15\">" << escape(title_) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : nice_ticks(x0, x1)) {
      const double x = px(t);
      os << "<line x1=\"" << x << "\" y1=\"" << top + ph << "\" x2=\"" << x << "\" y2=\"" << top + ph + 5
         << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\" "
         << "font-family=\"sans-serif\" font-size=\"11\">" << format_tick(t) << "</text>\n";
    }
    for (double t : nice_ticks(y0, y1)) {
      const double y = py(t);
      os << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
         << "\" stroke=\"black\"/>\n";
      os << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" "
         << "font-family=\"sans-serif\" font-size=\"11\">" << format_tick(t) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"13\">" << escape(x_label_) << "</text>\n";
    os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"13\">" << escape(y_label_) << "</text>\n";

    static constexpr std::array<const char*, 4> colors{"#c0392b", "#2c6fbb", "#27ae60", "#8e44ad"};
    for (std::size_t k = 0; k < series_.size(); ++k) {
      const auto& s = series_[k];
      const char* color = colors[k % colors.size()];
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      os << "\"/>\n";
      if (!s.label.empty()) {
        const double ly = top + 16 + 16 * static_cast<double>(k);
        os << "<line x1=\"" << left + pw - 110 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw - 90
           << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw - 85 << "\" y=\"" << ly << "\" font-family=\"sans-serif\" "
           << "font-size=\"11\">" << escape(s.label) << "</text>\n";
      }
    }
    os << "</svg>\n";
    return os.str();
  }

 private:
  std::string title_;
  std::string x_label_;
  std::string y_label_;
  std::vector<Series> series_;
};

}  // namespace sivmag::svg
