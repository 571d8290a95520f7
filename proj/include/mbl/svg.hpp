#pragma once

// Minimal SVG plots: heatmaps as rect grids and line plots with an optional
// inset panel.

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mbl::svg {

/// Two-color linear ramp, t clamped to [0, 1]:
/// t = 0 -> rgb(33, 102, 172) (blue), t = 1 -> rgb(178, 24, 43) (red).
std::array<int, 3> ramp(double t);
std::string ramp_hex(double t);

struct Marker {
  double x = 0.0;
  double y = 0.0;
  double x_err = 0.0;  // horizontal error bar half-width, 0 for none
};

struct Heatmap {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;  // column centers
  std::vector<double> y;  // row centers
  /// Row-major, y.size() rows of x.size() cells. Missing cells render gray.
  std::vector<std::optional<double>> cells;
  double vmin = 0.0;
  double vmax = 1.0;
  std::vector<Marker> markers;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // empty, or one half-width per point
};

struct Panel {
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

struct CurvePlot {
  std::string title;
  Panel main;
  std::optional<Panel> inset;
};

/// Throws InvalidArgument on a ragged grid or an empty plot.
std::string heatmap(const Heatmap& map);
std::string curves(const CurvePlot& plot);

}  // namespace mbl::svg
