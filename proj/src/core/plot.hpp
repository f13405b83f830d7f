// core/plot.hpp

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

#ifndef UFEMA_CORE_PLOT_HPP_
#define UFEMA_CORE_PLOT_HPP_

#include <string>
#include <vector>

namespace ufema {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

// Horizontal reference line with a label (e.g. a learned-fusion baseline).
struct PlotHLine {
  std::string label;
  double y = 0.0;
};

// Minimal deterministic SVG line plot: fixed canvas, one polyline per
// series, markers at data points, legend in the top-right corner.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series,
                    const std::vector<PlotHLine>& hlines = {});

}  // namespace ufema

#endif  // UFEMA_CORE_PLOT_HPP_
