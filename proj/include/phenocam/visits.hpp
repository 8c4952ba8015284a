#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "phenocam/imgproc.hpp"
#include "phenocam/timeutil.hpp"

namespace phenocam {

struct DetectionEntry {
  Box bbox;
  double confidence = 0.0;
  std::string label;
  std::optional<std::string> taxon_class;
};

// One detector's output for one image; one line of the interchange file.
struct DetectionRecord {
  std::string image_path;
  std::string camera_id;
  Timestamp timestamp;
  std::string detector;
  std::vector<DetectionEntry> entries;
};

// Interchange format: JSON Lines, one object per image with the keys
// image, camera_id, timestamp, detector, detections[{bbox, confidence, label, taxon_class}].
// Blank lines are ignored. Errors name the source, line and field. Records come
// back sorted by (camera_id, timestamp, image).
std::vector<DetectionRecord> parse_detections(std::istream& in, const std::string& source = "<stream>");
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);

std::string to_interchange_line(const DetectionRecord& record);
void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records);

void sort_records(std::vector<DetectionRecord>& records);
std::size_t entry_count(const std::vector<DetectionRecord>& records);

struct VisitConfig {
  double confidence_min = 0.2;
  double static_iou = 0.75;
  std::size_t static_run = 5;
  double stitch_gap_s = 15.0;
  std::set<std::string> taxon_keep{"Aves"};

  void validate() const;
};

struct FilterResult {
  std::vector<DetectionRecord> records;
  std::size_t dropped = 0;
  std::size_t missing = 0;  // taxon filter only: entries without a taxon_class
};

// Keeps entries with confidence >= confidence_min. Records left empty stay.
FilterResult filter_confidence(std::vector<DetectionRecord> records, double confidence_min);

// Keeps entries whose taxon_class is in `keep`; entries without one are
// dropped and counted in `missing`.
FilterResult filter_taxon(std::vector<DetectionRecord> records, const std::set<std::string>& keep);

// Removes every entry lying on a chain of at least `static_run` consecutive
// records in which each entry overlaps its predecessor's entry with
// IoU > static_iou. Input: one camera, time-sorted.
FilterResult suppress_static(std::vector<DetectionRecord> records, double static_iou, std::size_t static_run);

struct Visit {
  std::string camera_id;
  std::string species;
  Timestamp start;
  Timestamp end;
  std::size_t n_frames = 0;
  std::vector<std::string> member_refs;
  bool species_tie = false;
};

inline constexpr std::string_view kUnclassified = "unclassified";

// Groups records that still carry entries: a record joins the open visit when
// it follows the previous member by less than stitch_gap_s. Input: one camera,
// time-sorted.
std::vector<Visit> stitch_visits(const std::vector<DetectionRecord>& records, double stitch_gap_s);

struct DailyCount {
  std::string date;  // YYYY-MM-DD, UTC day of the visit start
  std::string camera_id;
  std::string species;
  std::size_t visits = 0;
};

std::vector<DailyCount> daily_counts(const std::vector<Visit>& visits);

struct StageSummary {
  std::string stage;
  std::size_t entries_in = 0;
  std::size_t entries_dropped = 0;
};

struct VisitsReport {
  std::vector<Visit> visits;
  std::vector<DailyCount> daily;
  std::vector<StageSummary> stages;
};

// Full pipeline over any number of cameras: confidence filter, optional taxon
// filter, per-camera static suppression, per-camera stitching, daily counts.
VisitsReport run_visits(std::vector<DetectionRecord> records, const VisitConfig& cfg, bool apply_taxon);

}  // namespace phenocam
