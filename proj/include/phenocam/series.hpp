#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace phenocam {

struct SeriesPoint {
  double t = 0.0;  // days since the first observation
  double value = 0.0;
  std::string frame_ref;
};

struct DbscanParams {
  double eps = 0.5;
  std::size_t min_pts = 5;

  void validate() const;
};

// How (t, value) are scaled before neighbourhood distances are taken.
enum class Scaling {
  None,
  ZScore,  // per-axis (x - mean) / stddev; a constant axis is only centred
};

inline constexpr int kNoise = -1;

// Density-based clustering in the (t, value) plane. A point is core when at
// least min_pts points (itself included) lie within eps. Clusters are numbered
// in order of their lowest-index core point; a border point reachable from
// several clusters belongs to the lowest-numbered one. Returns one label per
// point, kNoise for noise.
std::vector<int> dbscan(std::span<const SeriesPoint> points, const DbscanParams& params,
                        Scaling scaling = Scaling::ZScore);

// Least-squares polynomial, coefficients in ascending powers of t. Throws
// Error("underdetermined fit") when fewer than degree + 1 distinct t exist.
std::vector<double> polyfit(std::span<const SeriesPoint> points, int degree);

double polyval(std::span<const double> coefficients, double t);

// 1 - SS_res / SS_tot. Throws Error("degenerate R²") with fewer than two points
// or zero variance in the values.
double r_squared(std::span<const SeriesPoint> points, std::span<const double> coefficients);

struct TrendFit {
  int degree = 0;
  std::vector<double> coefficients;
  double r_squared = 0.0;
  std::size_t inlier_count = 0;
  std::size_t outlier_count = 0;
  std::vector<bool> inlier;  // parallel to the input points
};

// DBSCAN outlier rejection, then polyfit and R² on the inliers. The result does
// not depend on the order of `points` (apart from the order of `inlier`).
TrendFit fit_trend(std::span<const SeriesPoint> points, int degree, const DbscanParams& params,
                   Scaling scaling = Scaling::ZScore);

namespace reference {

// Same clustering as phenocam::dbscan with serial on-demand region queries.
std::vector<int> dbscan(std::span<const SeriesPoint> points, const DbscanParams& params,
                        Scaling scaling = Scaling::ZScore);

}  // namespace reference

}  // namespace phenocam
