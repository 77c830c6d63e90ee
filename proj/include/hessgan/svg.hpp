#pragma once

#include <string>
#include <vector>

#include "hessgan/landscape.hpp"
#include "hessgan/spectral.hpp"

namespace hessgan::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

/// Polylines over shared axes. Points with non-finite coordinates (or
/// non-positive y on a log axis) break the line.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

/// Log-density vs eigenvalue.
std::string density_plot(const SpectralDensity& density, const std::string& title);

/// Grid cells shaded by loss, with the projected trajectory on top.
std::string landscape_plot(const LandscapeGrid& grid, const std::vector<std::pair<double, double>>& trajectory,
                           const std::string& title);

}  // namespace hessgan::svg
