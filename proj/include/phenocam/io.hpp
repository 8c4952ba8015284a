#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "phenocam/imgproc.hpp"
#include "phenocam/phenology.hpp"
#include "phenocam/timeutil.hpp"

namespace phenocam::io {

namespace fs = std::filesystem;

// 8-bit RGB from PNG or JPEG. Throws Error naming the file when it cannot be decoded.
RgbImage load_image(const fs::path& path);
void save_png(const fs::path& path, const RgbImage& image);

// 16-bit single-channel PNG, 0 = invalid. Values are millimetres unless a
// sidecar `<image>.depth.json` next to the PNG sets "meters_per_unit" or
// "units" ("mm", "cm", "m").
DepthMap load_depth(const fs::path& path);
void save_depth_png(const fs::path& path, const DepthMap& depth);

// `<depth_dir>/<image stem>.depth.png`
fs::path depth_path_for(const fs::path& image, const fs::path& depth_dir);

struct FrameSource {
  fs::path path;
  std::string camera_id;
  Timestamp timestamp;
};

struct FrameListing {
  std::vector<FrameSource> frames;     // sorted by (camera_id, timestamp, path)
  std::vector<std::string> unresolved;  // images with no camera/timestamp
};

// Lists *.png/*.jpg/*.jpeg in `dir` (depth maps excluded). Camera and time come
// from `frames.csv` (image,camera_id,timestamp) when present, otherwise from
// the file name `<camera_id>_<YYYYMMDD>_<HHMMSS>.<ext>`.
FrameListing list_frames(const fs::path& dir);

// Parses `<camera_id>_<YYYYMMDD>_<HHMMSS>` from a file stem.
bool parse_frame_name(std::string_view stem, std::string& camera_id, Timestamp& timestamp);

// Shortest representation that round-trips.
std::string format_number(double v);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& path);

// Creates parent directories as needed.
void write_text(const fs::path& path, const std::string& content);

}  // namespace phenocam::io
