// Copyright (c) 2026 the ricot authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ricot::cli {

struct CurveSeries {
  std::string label;
  std::vector<double> values;  // one point per subset, in order
};

/// Render curve data as a small standalone SVG line chart. Output is
/// deterministic for identical inputs.
void write_curve_svg(std::ostream& out, const std::vector<std::string>& x_labels,
                     const std::vector<CurveSeries>& series);

}  // namespace ricot::cli
