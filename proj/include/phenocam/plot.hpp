#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "phenocam/timeutil.hpp"

namespace phenocam::plot {

struct SeriesRow {
  Timestamp timestamp;
  double value = 0.0;
  std::string camera_id;
  std::string metric;
  bool inlier = true;
};

struct TrendRow {
  std::string camera_id;
  std::string metric;
  int degree = 0;
  Timestamp t0;  // origin of the fit's time axis (days)
  double t_min = 0.0;
  double t_max = 0.0;
  double r_squared = 0.0;
  std::vector<double> coefficients;
};

struct VisitRow {
  std::string camera_id;
  std::string species;
  Timestamp start;
  Timestamp end;
  std::size_t n_frames = 0;
};

// Readers validate the header exactly; an unknown or missing column is an error.
std::vector<SeriesRow> read_series(const std::filesystem::path& path);
std::vector<TrendRow> read_trend(const std::filesystem::path& path);
std::vector<VisitRow> read_visits(const std::filesystem::path& path);

inline constexpr int kTrendSamples = 200;

// Deterministic SVG: one polyline per (camera, metric) series, one
// 200-vertex polyline per trend, visit bars in a strip under the plot area.
std::string render_svg(const std::vector<SeriesRow>& series, const std::vector<TrendRow>& trends,
                       const std::vector<VisitRow>& visits, const std::string& title = "");

}  // namespace phenocam::plot
