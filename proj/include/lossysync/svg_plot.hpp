#pragma once

#include <string>
#include <vector>

namespace lossysync::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    int width = 720;
    int height = 440;
};

/// Self-contained SVG document with axes, ticks, one polyline per series and a legend.
[[nodiscard]] std::string render(const LinePlot& plot);

}  // namespace lossysync::svg
