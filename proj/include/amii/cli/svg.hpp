// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace amii::cli {

struct Series {
  std::string name;
  std::string color;
  std::vector<double> y;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

}  // namespace detail

/// Line chart with one polyline per series against the sample index.
/// Non-finite points are dropped.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label, std::span<const Series> series,
                                 double x0 = 0, double dx = 1) {
  constexpr double W = 800, H = 400, L = 60, R = 20, T = 40, B = 50;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi == lo) lo -= 0.5, hi += 0.5;
  const double span_x = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](std::size_t i) { return L + (W - L - R) * static_cast<double>(i) / span_x; };
  auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << ' ' << H << "\" width=\"" << W
     << "\" height=\"" << H << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::escape(title)
     << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << detail::num(hi)
     << "</text>\n"
     << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"11\">" << detail::num(lo)
     << "</text>\n"
     << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"11\">" << detail::num(x0) << "</text>\n"
     << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\" font-size=\"11\">"
     << detail::num(x0 + dx * span_x) << "</text>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << detail::escape(x_label) << "</text>\n";
  double legend_y = T + 4;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << detail::escape(s.color) << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << (first ? "" : " ") << detail::num(px(i)) << ',' << detail::num(py(s.y[i]));
      first = false;
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << legend_y << "\" text-anchor=\"end\" font-size=\"12\" fill=\""
       << detail::escape(s.color) << "\">" << detail::escape(s.name) << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace amii::cli
