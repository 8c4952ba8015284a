#include "phenocam/commands.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "phenocam/config.hpp"
#include "phenocam/error.hpp"
#include "phenocam/eval.hpp"
#include "phenocam/io.hpp"
#include "phenocam/phenology.hpp"
#include "phenocam/plot.hpp"
#include "phenocam/series.hpp"
#include "phenocam/visits.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phenocam::cli {

namespace {

const std::vector<std::string> kSeriesHeader{"timestamp", "value", "camera_id", "metric", "inlier"};
const std::vector<std::string> kTrendHeader{"camera_id", "metric",       "degree",        "t0",          "t_min",
                                            "t_max",     "r_squared",    "inlier_count",  "outlier_count", "coefficients"};

SiteConfig load_config(const Options& opt) {
  return opt.config.empty() ? SiteConfig{} : SiteConfig::load(opt.config);
}

int thread_count(const Options& opt, const SiteConfig& cfg) {
  const int jobs = opt.jobs >= 0 ? opt.jobs : cfg.jobs;
#ifdef _OPENMP
  return jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
  return 1;
#endif
}

fs::path require_out_dir(const Options& opt) {
  if (opt.out.empty()) throw Error("--out is required");
  fs::create_directories(opt.out);
  return opt.out;
}

enum class Outcome { Ok, Skip, Fail };

struct FrameResult {
  Outcome outcome = Outcome::Skip;
  double value = 0.0;
  std::vector<Box> boxes;
  std::string reason;
};

struct Metric {
  const char* name;
  const char* file_prefix;
};

// Loads and scores every listed frame in parallel. `score` fills a result for
// one frame given the decoded image and optional depth map.
template <typename Score>
std::vector<FrameResult> process_frames(const std::vector<io::FrameSource>& frames, const fs::path& depth_dir,
                                        bool depth_required, bool strict, int threads, Score&& score) {
  std::vector<FrameResult> results(frames.size());
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& src = frames[i];
    FrameResult& res = results[i];
    try {
      Frame frame{src.camera_id, src.timestamp, io::load_image(src.path), src.path.filename().string()};
      std::optional<DepthMap> depth;
      if (depth_required) {
        const fs::path dp = io::depth_path_for(src.path, depth_dir);
        if (!fs::exists(dp)) {
          res.outcome = strict ? Outcome::Fail : Outcome::Skip;
          res.reason = "missing depth map " + dp.filename().string();
          continue;
        }
        depth = io::load_depth(dp);
      }
      score(frame, depth, res);
    } catch (const std::exception& e) {
      res.outcome = Outcome::Fail;
      res.reason = e.what();
    }
  }
  return results;
}

struct CameraSeries {
  std::string camera_id;
  Timestamp t0;
  std::vector<SeriesPoint> points;
  std::vector<Timestamp> stamps;
  std::optional<TrendFit> fit;
};

// Groups successful frames per camera, fits each camera's trend, and writes the
// series, trend and skip CSVs. Returns the exit code.
int write_metric_outputs(const Metric& metric, const SiteConfig& cfg, const io::FrameListing& listing,
                         const std::vector<FrameResult>& results, const fs::path& out_dir, bool strict,
                         std::ostream& diag, int (*degree_of)(const CameraSettings&)) {
  std::ostringstream skipped;
  io::write_csv_row(skipped, {"image", "camera_id", "reason"});
  for (const auto& name : listing.unresolved) {
    if (strict) throw Error("no camera/timestamp for " + name);
    diag << "warning: skipped " << name << ": no camera/timestamp (add frames.csv or use <camera>_<YYYYMMDD>_<HHMMSS>)\n";
    io::write_csv_row(skipped, {name, "", "no camera/timestamp"});
  }

  std::vector<CameraSeries> cameras;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& src = listing.frames[i];
    const auto& res = results[i];
    if (res.outcome == Outcome::Fail) throw Error(src.path.filename().string() + ": " + res.reason);
    if (res.outcome == Outcome::Skip) {
      diag << "warning: skipped " << src.path.filename().string() << ": " << res.reason << '\n';
      io::write_csv_row(skipped, {src.path.filename().string(), src.camera_id, res.reason});
      continue;
    }
    if (cameras.empty() || cameras.back().camera_id != src.camera_id) {
      cameras.push_back({src.camera_id, src.timestamp, {}, {}, std::nullopt});
    }
    CameraSeries& cs = cameras.back();
    cs.points.push_back({days_between(cs.t0, src.timestamp), res.value, src.path.filename().string()});
    cs.stamps.push_back(src.timestamp);
  }

  int exit_code = 0;
  for (auto& cs : cameras) {
    const CameraSettings& s = cfg.for_camera(cs.camera_id);
    try {
      cs.fit = fit_trend(cs.points, degree_of(s), s.dbscan, s.scaling);
    } catch (const Error& e) {
      diag << "error: " << metric.name << " trend for camera " << cs.camera_id << ": " << e.what() << '\n';
      exit_code = 1;
    }
  }

  std::ostringstream series;
  io::write_csv_row(series, kSeriesHeader);
  std::ostringstream trend;
  io::write_csv_row(trend, kTrendHeader);
  for (const auto& cs : cameras) {
    for (std::size_t i = 0; i < cs.points.size(); ++i) {
      const std::string inlier = cs.fit ? (cs.fit->inlier[i] ? "1" : "0") : "";
      io::write_csv_row(series, {format_timestamp(cs.stamps[i]), io::format_number(cs.points[i].value), cs.camera_id,
                                 metric.name, inlier});
    }
    if (!cs.fit) continue;
    double t_min = 0.0;
    double t_max = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < cs.points.size(); ++i) {
      if (!cs.fit->inlier[i]) continue;
      t_min = first ? cs.points[i].t : std::min(t_min, cs.points[i].t);
      t_max = first ? cs.points[i].t : std::max(t_max, cs.points[i].t);
      first = false;
    }
    std::string coefficients;
    for (std::size_t k = 0; k < cs.fit->coefficients.size(); ++k) {
      coefficients += (k ? ";" : "") + io::format_number(cs.fit->coefficients[k]);
    }
    io::write_csv_row(trend, {cs.camera_id, metric.name, std::to_string(cs.fit->degree), format_timestamp(cs.t0),
                              io::format_number(t_min), io::format_number(t_max),
                              io::format_number(cs.fit->r_squared), std::to_string(cs.fit->inlier_count),
                              std::to_string(cs.fit->outlier_count), coefficients});
    diag << metric.name << " camera " << cs.camera_id << ": R^2=" << io::format_number(cs.fit->r_squared)
         << " inliers=" << cs.fit->inlier_count << " outliers=" << cs.fit->outlier_count << '\n';
  }

  const std::string prefix = metric.file_prefix;
  io::write_text(out_dir / (prefix + "_series.csv"), series.str());
  io::write_text(out_dir / (prefix + "_trend.csv"), trend.str());
  io::write_text(out_dir / (prefix + "_skipped.csv"), skipped.str());
  return exit_code;
}

std::vector<DetectionRecord> merge_classifier(std::vector<DetectionRecord> records,
                                              const std::vector<DetectionRecord>& classified) {
  std::map<std::string, const DetectionRecord*> by_image;
  for (const auto& r : classified) by_image.emplace(r.image_path, &r);
  for (auto& r : records) {
    const auto it = by_image.find(r.image_path);
    if (it == by_image.end()) continue;
    for (auto& e : r.entries) {
      for (const auto& c : it->second->entries) {
        if (c.bbox == e.bbox && c.taxon_class) {
          e.taxon_class = c.taxon_class;
          break;
        }
      }
    }
  }
  return records;
}

}  // namespace

int cmd_greenness(const Options& opt, std::ostream& diag) {
  const SiteConfig cfg = load_config(opt);
  const bool strict = opt.strict || cfg.strict;
  const fs::path out_dir = require_out_dir(opt);
  if (opt.images.empty()) throw Error("--images is required");
  const fs::path depth_dir = opt.depth_dir.empty() ? opt.images : opt.depth_dir;
  const auto listing = io::list_frames(opt.images);

  const auto results = process_frames(
      listing.frames, depth_dir, true, strict, thread_count(opt, cfg),
      [&](const Frame& frame, const std::optional<DepthMap>& depth, FrameResult& res) {
        const GreennessConfig& g = cfg.for_camera(frame.camera_id).greenness;
        const Foreground fg = extract_foreground(frame, *depth, g);
        if (fg.insufficient) {
          res.outcome = Outcome::Skip;
          res.reason = "insufficient foreground";
          return;
        }
        res.outcome = Outcome::Ok;
        res.value = greenness_score(frame, fg.mask, g);
      });

  return write_metric_outputs({"greenness", "greenness"}, cfg, listing, results, out_dir, strict, diag,
                              [](const CameraSettings& s) { return s.greenness_degree; });
}

int cmd_berries(const Options& opt, std::ostream& diag) {
  const SiteConfig cfg = load_config(opt);
  const bool strict = opt.strict || cfg.strict;
  const fs::path out_dir = require_out_dir(opt);
  if (opt.images.empty()) throw Error("--images is required");
  const fs::path depth_dir = opt.depth_dir.empty() ? opt.images : opt.depth_dir;
  const auto listing = io::list_frames(opt.images);

  bool any_gate = false;
  for (const auto& f : listing.frames) any_gate = any_gate || cfg.for_camera(f.camera_id).berry_foreground_gate;

  const auto results = process_frames(
      listing.frames, depth_dir, any_gate, strict, thread_count(opt, cfg),
      [&](const Frame& frame, const std::optional<DepthMap>& depth, FrameResult& res) {
        const CameraSettings& s = cfg.for_camera(frame.camera_id);
        BerryDetection det;
        if (s.berry_foreground_gate) {
          det = detect_berries(frame, s.berries, extract_foreground(frame, *depth, s.greenness).mask);
        } else {
          det = detect_berries(frame, s.berries);
        }
        res.outcome = Outcome::Ok;
        res.value = static_cast<double>(det.count);
        res.boxes = std::move(det.boxes);
      });

  std::ostringstream boxes;
  io::write_csv_row(boxes, {"image", "camera_id", "timestamp", "x_min", "y_min", "x_max", "y_max"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].outcome != Outcome::Ok) continue;
    const auto& src = listing.frames[i];
    for (const Box& b : results[i].boxes) {
      io::write_csv_row(boxes, {src.path.filename().string(), src.camera_id, format_timestamp(src.timestamp),
                                io::format_number(b.x_min), io::format_number(b.y_min), io::format_number(b.x_max),
                                io::format_number(b.y_max)});
    }
  }
  const int code = write_metric_outputs({"berry_count", "berries"}, cfg, listing, results, out_dir, strict,
                                        diag, [](const CameraSettings& s) { return s.berry_degree; });
  io::write_text(out_dir / "berries_boxes.csv", boxes.str());
  return code;
}

int cmd_visits(const Options& opt, std::ostream& diag) {
  const SiteConfig cfg = load_config(opt);
  const fs::path out_dir = require_out_dir(opt);
  if (opt.detections.empty()) throw Error("--detections is required");
  auto records = load_detections(opt.detections);

  std::set<std::string> detectors;
  for (const auto& r : records) detectors.insert(r.detector);
  if (detectors.size() > 1) {
    std::string names;
    for (const auto& d : detectors) names += (names.empty() ? "" : ", ") + d;
    throw Error("single detector per run (found: " + names + ")");
  }
  if (!opt.classifier.empty()) records = merge_classifier(std::move(records), load_detections(opt.classifier));

  const bool apply_taxon = std::any_of(records.begin(), records.end(), [](const DetectionRecord& r) {
    return std::any_of(r.entries.begin(), r.entries.end(), [](const DetectionEntry& e) { return e.taxon_class.has_value(); });
  });
  if (!apply_taxon) diag << "note: no taxon_class present; taxon filter not applied\n";

  // Cameras are independent; each runs with its own thresholds.
  std::vector<Visit> visits;
  std::map<std::string, StageSummary> stages;
  std::vector<std::string> stage_order;
  auto begin = records.begin();
  while (begin != records.end()) {
    const std::string camera = begin->camera_id;
    auto end = std::find_if(begin, records.end(), [&](const DetectionRecord& r) { return r.camera_id != camera; });
    auto report = run_visits(std::vector<DetectionRecord>(begin, end), cfg.for_camera(camera).visits, apply_taxon);
    visits.insert(visits.end(), report.visits.begin(), report.visits.end());
    for (const auto& st : report.stages) {
      auto [it, inserted] = stages.emplace(st.stage, StageSummary{st.stage, 0, 0});
      if (inserted) stage_order.push_back(st.stage);
      it->second.entries_in += st.entries_in;
      it->second.entries_dropped += st.entries_dropped;
    }
    begin = end;
  }

  std::ostringstream vcsv;
  io::write_csv_row(vcsv, {"camera_id", "species", "start", "end", "n_frames"});
  for (const auto& v : visits) {
    if (v.species_tie) {
      diag << "warning: species tie in visit " << v.camera_id << " " << format_timestamp(v.start) << ", chose "
           << v.species << '\n';
    }
    io::write_csv_row(vcsv, {v.camera_id, v.species, format_timestamp(v.start), format_timestamp(v.end),
                             std::to_string(v.n_frames)});
  }
  std::ostringstream dcsv;
  io::write_csv_row(dcsv, {"date", "camera_id", "species", "visits"});
  for (const auto& d : daily_counts(visits)) {
    io::write_csv_row(dcsv, {d.date, d.camera_id, d.species, std::to_string(d.visits)});
  }
  std::ostringstream scsv;
  io::write_csv_row(scsv, {"stage", "entries_in", "entries_dropped"});
  for (const auto& name : stage_order) {
    const auto& st = stages.at(name);
    io::write_csv_row(scsv, {st.stage, std::to_string(st.entries_in), std::to_string(st.entries_dropped)});
    diag << "stage " << st.stage << ": " << st.entries_dropped << " of " << st.entries_in << " entries dropped\n";
  }
  diag << "visits: " << visits.size() << '\n';

  io::write_text(out_dir / "visits.csv", vcsv.str());
  io::write_text(out_dir / "daily_counts.csv", dcsv.str());
  io::write_text(out_dir / "visits_summary.csv", scsv.str());
  return 0;
}

int cmd_eval(const Options& opt, std::ostream& diag) {
  const SiteConfig cfg = load_config(opt);
  const fs::path out_dir = require_out_dir(opt);
  if (opt.detections.empty()) throw Error("--detections is required");
  if (opt.ground_truth.empty()) throw Error("--ground-truth is required");
  const auto pred = load_detections(opt.detections);
  const auto gt = load_detections(opt.ground_truth);
  const auto rows = evaluate_methods(pred, gt, opt.iou_min, cfg.defaults.visits);

  std::ostringstream csv;
  io::write_csv_row(csv, {"method", "precision", "recall", "f1", "tp", "fp", "fn"});
  for (const auto& r : rows) {
    io::write_csv_row(csv, {r.method, io::format_number(r.scores.precision), io::format_number(r.scores.recall),
                            io::format_number(r.scores.f1), std::to_string(r.match.tp), std::to_string(r.match.fp),
                            std::to_string(r.match.fn)});
    char line[160];
    std::snprintf(line, sizeof line, "%-28s P=%.3f R=%.3f F1=%.3f\n", r.method.c_str(), r.scores.precision,
                  r.scores.recall, r.scores.f1);
    diag << line;
  }
  io::write_text(out_dir / "eval.csv", csv.str());
  return 0;
}

int cmd_plot(const Options& opt, std::ostream& diag) {
  if (opt.out.empty()) throw Error("--out is required");
  if (opt.series.empty() && opt.trend.empty() && opt.visits.empty()) {
    throw Error("plot needs at least one of --series, --trend, --visits");
  }
  const auto series = opt.series.empty() ? std::vector<plot::SeriesRow>{} : plot::read_series(opt.series);
  const auto trend = opt.trend.empty() ? std::vector<plot::TrendRow>{} : plot::read_trend(opt.trend);
  const auto visits = opt.visits.empty() ? std::vector<plot::VisitRow>{} : plot::read_visits(opt.visits);
  const fs::path target = opt.out.extension() == ".svg" ? opt.out : opt.out / "plot.svg";
  io::write_text(target, plot::render_svg(series, trend, visits, opt.title));
  diag << "wrote " << target.string() << '\n';
  return 0;
}

}  // namespace phenocam::cli
