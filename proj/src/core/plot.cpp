// core/plot.cpp

// Copyright 2026  The ufema authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace ufema {

namespace {

constexpr int kWidth = 720, kHeight = 480;
constexpr int kMarginL = 70, kMarginR = 150, kMarginT = 50, kMarginB = 60;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf"};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series,
                    const std::vector<PlotHLine>& hlines) {
  require_arg(!series.empty(), "plot needs at least one series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    require_arg(s.x.size() == s.y.size() && !s.x.empty(), "bad plot series");
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  for (const auto& h : hlines) ymin = std::min(ymin, h.y), ymax = std::max(ymax, h.y);
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double pw = kWidth - kMarginL - kMarginR;
  const double ph = kHeight - kMarginT - kMarginB;
  auto px = [&](double x) { return kMarginL + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kMarginT + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"25\" text-anchor=\"middle\" "
         "font-size=\"16\" font-family=\"sans-serif\">" << title << "</text>\n";

  // axes + ticks
  svg << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double xv = xmin + i * (xmax - xmin) / n_ticks;
    const double yv = ymin + i * (ymax - ymin) / n_ticks;
    svg << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << kMarginT + ph
        << "\" x2=\"" << fmt(px(xv)) << "\" y2=\"" << kMarginT + ph + 5
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << kMarginT + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\" "
           "font-family=\"sans-serif\">" << fmt(xv) << "</text>\n"
        << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << fmt(py(yv))
        << "\" x2=\"" << kMarginL << "\" y2=\"" << fmt(py(yv))
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kMarginL - 8 << "\" y=\"" << fmt(py(yv) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" "
           "font-family=\"sans-serif\">" << fmt(yv) << "</text>\n";
  }
  svg << "<text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\">" << x_label << "</text>\n"
      << "<text x=\"18\" y=\"" << kMarginT + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 " << kMarginT + ph / 2 << ")\">" << y_label
      << "</text>\n";

  int color_i = 0;
  int legend_y = kMarginT + 10;
  for (const auto& h : hlines) {
    const char* c = kColors[color_i++ % 7];
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(py(h.y)) << "\" x2=\""
        << kMarginL + pw << "\" y2=\"" << fmt(py(h.y)) << "\" stroke=\"" << c
        << "\" stroke-dasharray=\"6,4\"/>\n"
        << "<text x=\"" << kWidth - kMarginR + 10 << "\" y=\"" << legend_y
        << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << c << "\">"
        << h.label << "</text>\n";
    legend_y += 18;
  }
  for (const auto& s : series) {
    const char* c = kColors[color_i++ % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" "
           "points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      svg << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
    svg << "\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i)
      svg << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i]))
          << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    svg << "<text x=\"" << kWidth - kMarginR + 10 << "\" y=\"" << legend_y
        << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << c << "\">"
        << s.label << "</text>\n";
    legend_y += 18;
  }
  svg << "</svg>\n";

  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::kIoError, "cannot write plot: " + path);
  f << svg.str();
}

}  // namespace ufema
