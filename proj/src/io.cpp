#include "phenocam/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "phenocam/error.hpp"

namespace phenocam::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

double meters_per_unit_for(const fs::path& depth_png) {
  fs::path sidecar = depth_png;
  sidecar.replace_extension(".json");
  if (!fs::exists(sidecar)) return 0.001;
  std::ifstream in(sidecar);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse depth sidecar " + sidecar.string() + ": " + e.what());
  }
  if (meta.contains("meters_per_unit")) {
    const double v = meta["meters_per_unit"].get<double>();
    if (!(v > 0.0)) throw Error("depth sidecar " + sidecar.string() + ": meters_per_unit must be > 0");
    return v;
  }
  if (meta.contains("units")) {
    const std::string u = meta["units"].get<std::string>();
    if (u == "mm") return 0.001;
    if (u == "cm") return 0.01;
    if (u == "m") return 1.0;
    throw Error("depth sidecar " + sidecar.string() + ": unknown units '" + u + "'");
  }
  return 0.001;
}

}  // namespace

RgbImage load_image(const fs::path& path) {
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty() || bgr.type() != CV_8UC3) throw Error("cannot decode image " + path.string());
  std::vector<Rgb> pixels(static_cast<std::size_t>(bgr.rows) * bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      pixels[static_cast<std::size_t>(y) * bgr.cols + x] = {row[x][2], row[x][1], row[x][0]};
    }
  }
  return RgbImage(bgr.cols, bgr.rows, std::move(pixels));
}

void save_png(const fs::path& path, const RgbImage& image) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      const Rgb p = image.at(x, y);
      row[x] = cv::Vec3b(p.b, p.g, p.r);
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw Error("cannot write image " + path.string());
}

DepthMap load_depth(const fs::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error("cannot decode depth map " + path.string());
  if (raw.type() != CV_16UC1) throw Error("depth map " + path.string() + " is not a 16-bit single-channel PNG");
  const double scale = meters_per_unit_for(path);
  const auto n = static_cast<std::size_t>(raw.rows) * raw.cols;
  std::vector<float> depth(n, 0.0f);
  std::vector<std::uint8_t> valid(n, 0);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < raw.cols; ++x) {
      if (row[x] == 0) continue;
      const auto i = static_cast<std::size_t>(y) * raw.cols + x;
      depth[i] = static_cast<float>(row[x] * scale);
      valid[i] = 1;
    }
  }
  return DepthMap(raw.cols, raw.rows, std::move(depth), std::move(valid));
}

void save_depth_png(const fs::path& path, const DepthMap& depth) {
  cv::Mat raw(depth.height(), depth.width(), CV_16UC1, cv::Scalar(0));
  for (int y = 0; y < depth.height(); ++y) {
    auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double mm = std::clamp(std::round(depth.depth(x, y) * 1000.0), 1.0, 65535.0);
      row[x] = static_cast<std::uint16_t>(mm);
    }
  }
  if (!cv::imwrite(path.string(), raw)) throw Error("cannot write depth map " + path.string());
}

fs::path depth_path_for(const fs::path& image, const fs::path& depth_dir) {
  return depth_dir / (image.stem().string() + ".depth.png");
}

bool parse_frame_name(std::string_view stem, std::string& camera_id, Timestamp& timestamp) {
  const auto t_sep = stem.rfind('_');
  if (t_sep == std::string_view::npos || t_sep == 0) return false;
  const auto d_sep = stem.rfind('_', t_sep - 1);
  if (d_sep == std::string_view::npos || d_sep == 0) return false;
  const auto date = stem.substr(d_sep + 1, t_sep - d_sep - 1);
  const auto time = stem.substr(t_sep + 1);
  if (date.size() != 8 || time.size() != 6 || !all_digits(date) || !all_digits(time)) return false;
  const std::string iso = std::string(date.substr(0, 4)) + "-" + std::string(date.substr(4, 2)) + "-" +
                          std::string(date.substr(6, 2)) + "T" + std::string(time.substr(0, 2)) + ":" +
                          std::string(time.substr(2, 2)) + ":" + std::string(time.substr(4, 2)) + "Z";
  const auto t = parse_timestamp(iso);
  if (!t) return false;
  camera_id = std::string(stem.substr(0, d_sep));
  timestamp = *t;
  return true;
}

FrameListing list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("image directory not found: " + dir.string());

  std::map<std::string, std::pair<std::string, Timestamp>> manifest;
  const fs::path manifest_path = dir / "frames.csv";
  if (fs::exists(manifest_path)) {
    const CsvTable table = read_csv(manifest_path);
    const std::vector<std::string> expected{"image", "camera_id", "timestamp"};
    if (table.header != expected) throw Error(manifest_path.string() + ": header must be image,camera_id,timestamp");
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      if (row.size() != 3) throw Error(manifest_path.string() + ":" + std::to_string(i + 2) + ": expected 3 fields");
      const auto t = parse_timestamp(row[2]);
      if (!t) throw Error(manifest_path.string() + ":" + std::to_string(i + 2) + ": field 'timestamp' is not ISO-8601");
      manifest[row[0]] = {row[1], *t};
    }
  }

  FrameListing listing;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = lower(entry.path().filename().string());
    if (ends_with(name, ".depth.png")) continue;
    if (ends_with(name, ".png") || ends_with(name, ".jpg") || ends_with(name, ".jpeg")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto& f : files) {
    FrameSource src{f, {}, {}};
    if (const auto it = manifest.find(f.filename().string()); it != manifest.end()) {
      src.camera_id = it->second.first;
      src.timestamp = it->second.second;
    } else if (!parse_frame_name(f.stem().string(), src.camera_id, src.timestamp)) {
      listing.unresolved.push_back(f.filename().string());
      continue;
    }
    listing.frames.push_back(std::move(src));
  }
  std::sort(listing.frames.begin(), listing.frames.end(), [](const FrameSource& a, const FrameSource& b) {
    return std::tie(a.camera_id, a.timestamp, a.path) < std::tie(b.camera_id, b.timestamp, b.path);
  });
  return listing;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      table.header = split_csv_line(line);
      first = false;
    } else {
      table.rows.push_back(split_csv_line(line));
    }
  }
  return table;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace phenocam::io
