#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace phenocam::cli {

namespace fs = std::filesystem;

struct Options {
  fs::path config;
  fs::path images;
  fs::path depth_dir;  // defaults to `images`
  fs::path detections;
  fs::path classifier;
  fs::path ground_truth;
  fs::path out;
  fs::path series;
  fs::path trend;
  fs::path visits;
  std::string title;
  int jobs = -1;  // -1: take from config
  bool strict = false;
  double iou_min = 0.1;
};

// Each command writes its outputs under `out`, reports warnings and skips on
// `diag`, and returns the process exit code. Hard errors throw phenocam::Error.
//
// greenness: greenness_series.csv, greenness_trend.csv, greenness_skipped.csv
// berries:   berries_series.csv, berries_trend.csv, berries_boxes.csv, berries_skipped.csv
// visits:    visits.csv, daily_counts.csv, visits_summary.csv
// eval:      eval.csv
// plot:      `out` itself when it ends in .svg, else out/plot.svg
int cmd_greenness(const Options& opt, std::ostream& diag);
int cmd_berries(const Options& opt, std::ostream& diag);
int cmd_visits(const Options& opt, std::ostream& diag);
int cmd_eval(const Options& opt, std::ostream& diag);
int cmd_plot(const Options& opt, std::ostream& diag);

}  // namespace phenocam::cli
