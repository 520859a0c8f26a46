#pragma once

#include <string>
#include <vector>

#include "planarflow/grid.hpp"
#include "planarflow/homography.hpp"

namespace planarflow::plot {

struct Series {
    std::string label;
    std::vector<double> values;
};

// Batch-artifact charts: line plot of one or more series over their index,
// with axis ticks and labels, written as PNG.
void line_chart(const std::string& path, const std::vector<Series>& series,
                const std::string& title, int width = 800, int height = 480);

// Horizontal bar chart for per-component summaries.
void bar_chart(const std::string& path, const std::vector<std::pair<std::string, double>>& bars,
               const std::string& title, int width = 640, int height = 360);

// Flow visualization: direction as hue-less brightness pair (u -> red plane
// encoded in gray gradient is useless, so use a two-tone scheme): magnitude
// as brightness, sign split across green/blue channels, invalid pixels red.
void flow_image(const std::string& path, const homog::FlowField& flow);

// Grid of video frames, tiled left to right.
void frame_strip(const std::string& path, const Volume& video, int max_frames = 8);

} // namespace planarflow::plot
