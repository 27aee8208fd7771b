#pragma once

#include "culmark/metrics.hpp"

#include <span>
#include <string>

namespace culmark {

struct PlotStyle {
    std::string title;
    std::string x_label = "generation";
    std::string y_label;
    int width = 640;
    int height = 400;
};

/// Standalone SVG line chart: one polyline per series (when it has two or more
/// points), a marker per point, and +-1 SE error bars where se > 0.
/// PI is drawn blue and NPI orange; other conditions cycle through a fixed palette.
/// Throws InvalidArgument when there are no points to draw.
std::string emit_plot_svg(std::span<const MetricSeries> series, const PlotStyle& style = {});

} // namespace culmark
