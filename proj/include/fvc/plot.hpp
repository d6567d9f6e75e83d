#pragma once

#include <string>
#include <vector>

#include "fvc/raster.hpp"

namespace fvc {

struct PlotSeries {
  std::string label;
  std::vector<double> values;
};

// Minimal static line chart: white background, axes, one polyline per
// series in a fixed palette, labels along the top edge.
Frame render_line_chart(const std::vector<PlotSeries>& series, int width,
                        int height);

// Flow magnitude as a grayscale heatmap, linearly scaled and clamped at
// max_px; invalid pixels black.
Frame render_flow_magnitude(const FlowField& flow, double max_px);

}  // namespace fvc
