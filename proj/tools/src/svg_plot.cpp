// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#include "svg_plot.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ricot::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 48.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

void write_curve_svg(std::ostream& out, const std::vector<std::string>& x_labels,
                     const std::vector<CurveSeries>& series) {
  const std::size_t n = x_labels.size();
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const auto x_at = [&](std::size_t i) {
    return n <= 1 ? kMargin + plot_w / 2
                  : kMargin + plot_w * static_cast<double>(i) /
                        static_cast<double>(n - 1);
  };
  const auto y_at = [&](double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return kMargin + plot_h * (1.0 - clamped);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes.
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
      << kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
      << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  for (const double tick : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << y_at(tick) + 4
        << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#333\">"
        << fmt(tick) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    out << "<text x=\"" << x_at(i) << "\" y=\"" << kHeight - kMargin + 16
        << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333\">"
        << x_labels[i] << "</text>\n";
  }
  std::size_t color = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\""
        << kColors[color % (sizeof(kColors) / sizeof(kColors[0]))]
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.values.size() && i < n; ++i) {
      if (i > 0) out << ' ';
      out << x_at(i) << ',' << y_at(s.values[i]);
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin + 4 << "\" y=\""
        << kMargin + 14.0 * static_cast<double>(color)
        << "\" font-size=\"10\" fill=\""
        << kColors[color % (sizeof(kColors) / sizeof(kColors[0]))] << "\">"
        << s.label << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
}

}  // namespace ricot::cli
