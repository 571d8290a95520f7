#pragma once

// Disorder averaging and finite-size data collapse with the scaling variable
// x = N^(1/nu) (h - h_c).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mbl {

struct CurvePoint {
  double h = 0.0;
  double mean = 0.0;
  double std = 0.0;  // ensemble standard deviation, 0 when n < 2
  std::size_t n = 0;

  bool has_band() const noexcept { return n >= 2; }
  bool operator==(const CurvePoint&) const = default;
};

struct AveragedCurve {
  int n_sites = 0;
  double epsilon = 0.0;
  std::vector<CurvePoint> points;  // h strictly increasing
};

/// One disorder realization's value of an observable at (N, epsilon, h).
struct Sample {
  int n_sites = 0;
  double epsilon = 0.0;
  double h = 0.0;
  double value = 0.0;
};

/// Mean and s = sqrt(sum (x_i - mean)^2 / (n - 1)). The result does not
/// depend on the order of `values`.
CurvePoint average_point(double h, std::span<const double> values);

/// Groups samples by (N, epsilon, h); curves come out sorted by (N, epsilon)
/// with points sorted by h.
std::vector<AveragedCurve> disorder_average(std::span<const Sample> samples);

struct CollapseGrid {
  double h_c_min = 0.5;
  double h_c_max = 6.0;
  double h_c_step = 0.1;
  double nu_min = 0.5;
  double nu_max = 3.0;
  double nu_step = 0.05;
  /// Error half-width: distance at which quality first exceeds this multiple
  /// of its minimum along one axis, the other held at the optimum.
  double error_factor = 2.0;
  unsigned workers = 1;
};

struct CollapseResult {
  double h_c = 0.0;
  double nu = 0.0;
  double quality = 0.0;
  double h_c_err = 0.0;
  double nu_err = 0.0;
  std::size_t evaluated = 0;  // grid candidates with a defined quality
  CollapseGrid grid;
};

/// Mean squared deviation of every curve's points from linear interpolations
/// of the other curves, restricted to overlapping scaled ranges. Throws
/// NoOverlap when no point falls inside another curve's range.
double collapse_quality(std::span<const AveragedCurve> curves, double h_c, double nu);

/// Grid search over (h_c, nu) followed by a local pattern-search refinement.
/// Ties on the grid go to the lexicographically smallest (h_c, nu).
CollapseResult collapse_fit(std::span<const AveragedCurve> curves, const CollapseGrid& grid = {});

struct BoundaryRow {
  double epsilon = 0.0;
  CollapseResult result;
};

/// Rows sorted by epsilon.
std::vector<BoundaryRow> phase_boundary(std::vector<BoundaryRow> rows);

/// Columns: epsilon,nu,dnu,h_c,dh_c,quality
std::string boundary_csv(std::span<const BoundaryRow> rows);

/// Columns: n_sites,epsilon,h,mean,std,n
std::string curves_csv(std::span<const AveragedCurve> curves);

struct Band {
  double lo = 0.1;
  double hi = 0.9;
};

/// Extent in h of the contiguous region around the curve's 0.5 crossing where
/// lo < mean < hi, with linear interpolation between grid points.
double uncertainty_width(const AveragedCurve& curve, Band band = {});

/// h values where the mean crosses `level` (linear interpolation).
std::vector<double> crossings(const AveragedCurve& curve, double level = 0.5);

}  // namespace mbl
