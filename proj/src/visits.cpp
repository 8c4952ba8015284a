#include "phenocam/visits.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "phenocam/error.hpp"

namespace phenocam {

namespace {

using nlohmann::json;

class LineContext {
 public:
  LineContext(const std::string& source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw Error(source_ + ":" + std::to_string(line_) + ": field '" + field + "': " + what);
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing");
    return *it;
  }

  std::string require_string(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = require(obj, key, path);
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  double require_number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "not finite");
    return d;
  }

 private:
  const std::string& source_;
  std::size_t line_;
};

DetectionEntry parse_entry(const json& obj, const LineContext& ctx, const std::string& path,
                           std::size_t& confidence_violations, std::string& first_violation) {
  if (!obj.is_object()) ctx.fail(path, "expected an object");
  DetectionEntry e;

  const json& bbox = ctx.require(obj, "bbox", path + ".bbox");
  if (!bbox.is_array() || bbox.size() != 4) ctx.fail(path + ".bbox", "expected [x_min,y_min,x_max,y_max]");
  e.bbox = {ctx.require_number(bbox[0], path + ".bbox[0]"), ctx.require_number(bbox[1], path + ".bbox[1]"),
            ctx.require_number(bbox[2], path + ".bbox[2]"), ctx.require_number(bbox[3], path + ".bbox[3]")};
  if (!(e.bbox.x_max > e.bbox.x_min && e.bbox.y_max > e.bbox.y_min)) ctx.fail(path + ".bbox", "box has no area");

  e.confidence = ctx.require_number(ctx.require(obj, "confidence", path + ".confidence"), path + ".confidence");
  if (e.confidence < 0.0 || e.confidence > 1.0) {
    if (confidence_violations++ == 0) {
      std::ostringstream os;
      os << "field '" << path << ".confidence' value " << e.confidence << " outside [0,1]";
      first_violation = os.str();
    }
  }

  e.label = ctx.require_string(obj, "label", path + ".label");
  if (const auto it = obj.find("taxon_class"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) ctx.fail(path + ".taxon_class", "expected a string or null");
    e.taxon_class = it->get<std::string>();
  }
  return e;
}

std::size_t count_entries(const std::vector<DetectionRecord>& records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.entries.size();
  return n;
}

}  // namespace

std::vector<DetectionRecord> parse_detections(std::istream& in, const std::string& source) {
  std::vector<DetectionRecord> records;
  std::size_t violations = 0;
  std::size_t first_violation_line = 0;
  std::string first_violation;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    const LineContext ctx(source, line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      ctx.fail("<record>", std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) ctx.fail("<record>", "expected an object");

    DetectionRecord rec;
    rec.image_path = ctx.require_string(obj, "image", "image");
    rec.camera_id = ctx.require_string(obj, "camera_id", "camera_id");
    const std::string ts = ctx.require_string(obj, "timestamp", "timestamp");
    const auto parsed = parse_timestamp(ts);
    if (!parsed) ctx.fail("timestamp", "not an ISO-8601 timestamp: '" + ts + "'");
    rec.timestamp = *parsed;
    rec.detector = ctx.require_string(obj, "detector", "detector");

    const json& dets = ctx.require(obj, "detections", "detections");
    if (!dets.is_array()) ctx.fail("detections", "expected an array");
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const std::size_t before = violations;
      rec.entries.push_back(
          parse_entry(dets[i], ctx, "detections[" + std::to_string(i) + "]", violations, first_violation));
      if (before == 0 && violations > 0) first_violation_line = line_no;
    }
    records.push_back(std::move(rec));
  }

  if (violations > 0) {
    throw Error(source + ":" + std::to_string(first_violation_line) + ": " + first_violation + "; " +
                std::to_string(violations) + " entr" + (violations == 1 ? "y" : "ies") +
                " rejected for out-of-range confidence");
  }
  sort_records(records);
  return records;
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open detections file " + path.string());
  return parse_detections(in, path.string());
}

std::string to_interchange_line(const DetectionRecord& record) {
  json obj;
  obj["image"] = record.image_path;
  obj["camera_id"] = record.camera_id;
  obj["timestamp"] = format_timestamp(record.timestamp);
  obj["detector"] = record.detector;
  json dets = json::array();
  for (const auto& e : record.entries) {
    json d;
    d["bbox"] = {e.bbox.x_min, e.bbox.y_min, e.bbox.x_max, e.bbox.y_max};
    d["confidence"] = e.confidence;
    d["label"] = e.label;
    d["taxon_class"] = e.taxon_class ? json(*e.taxon_class) : json(nullptr);
    dets.push_back(std::move(d));
  }
  obj["detections"] = std::move(dets);
  return obj.dump();
}

void write_detections(std::ostream& out, const std::vector<DetectionRecord>& records) {
  for (const auto& r : records) out << to_interchange_line(r) << '\n';
}

void sort_records(std::vector<DetectionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const DetectionRecord& a, const DetectionRecord& b) {
    return std::tie(a.camera_id, a.timestamp, a.image_path) < std::tie(b.camera_id, b.timestamp, b.image_path);
  });
}

std::size_t entry_count(const std::vector<DetectionRecord>& records) { return count_entries(records); }

void VisitConfig::validate() const {
  if (!(confidence_min >= 0.0 && confidence_min <= 1.0)) throw Error("visits.confidence_min must lie in [0,1]");
  if (!(static_iou >= 0.0 && static_iou <= 1.0)) throw Error("visits.static_iou must lie in [0,1]");
  if (static_run < 2) throw Error("visits.static_run must be >= 2");
  if (!(stitch_gap_s > 0.0) || !std::isfinite(stitch_gap_s)) throw Error("visits.stitch_gap_s must be > 0");
}

FilterResult filter_confidence(std::vector<DetectionRecord> records, double confidence_min) {
  FilterResult out;
  for (auto& r : records) {
    const auto before = r.entries.size();
    std::erase_if(r.entries, [&](const DetectionEntry& e) { return e.confidence < confidence_min; });
    out.dropped += before - r.entries.size();
  }
  out.records = std::move(records);
  return out;
}

FilterResult filter_taxon(std::vector<DetectionRecord> records, const std::set<std::string>& keep) {
  FilterResult out;
  for (auto& r : records) {
    std::erase_if(r.entries, [&](const DetectionEntry& e) {
      if (!e.taxon_class) {
        ++out.missing;
        return true;
      }
      if (!keep.contains(*e.taxon_class)) {
        ++out.dropped;
        return true;
      }
      return false;
    });
  }
  out.records = std::move(records);
  return out;
}

FilterResult suppress_static(std::vector<DetectionRecord> records, double static_iou, std::size_t static_run) {
  const std::size_t n = records.size();
  // forward[k][e]: longest qualifying chain ending at entry e of record k;
  // backward[k][e]: longest one starting there.
  std::vector<std::vector<std::size_t>> forward(n);
  std::vector<std::vector<std::size_t>> backward(n);
  for (std::size_t k = 0; k < n; ++k) {
    forward[k].assign(records[k].entries.size(), 1);
    backward[k].assign(records[k].entries.size(), 1);
  }
  for (std::size_t k = 1; k < n; ++k) {
    const auto& prev = records[k - 1].entries;
    const auto& cur = records[k].entries;
    for (std::size_t e = 0; e < cur.size(); ++e) {
      for (std::size_t p = 0; p < prev.size(); ++p) {
        if (iou(prev[p].bbox, cur[e].bbox) > static_iou) forward[k][e] = std::max(forward[k][e], forward[k - 1][p] + 1);
      }
    }
  }
  for (std::size_t k = n; k-- > 1;) {
    const auto& prev = records[k - 1].entries;
    const auto& cur = records[k].entries;
    for (std::size_t p = 0; p < prev.size(); ++p) {
      for (std::size_t e = 0; e < cur.size(); ++e) {
        if (iou(prev[p].bbox, cur[e].bbox) > static_iou) {
          backward[k - 1][p] = std::max(backward[k - 1][p], backward[k][e] + 1);
        }
      }
    }
  }

  FilterResult out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& entries = records[k].entries;
    std::vector<DetectionEntry> kept;
    for (std::size_t e = 0; e < entries.size(); ++e) {
      if (forward[k][e] + backward[k][e] - 1 >= static_run) {
        ++out.dropped;
      } else {
        kept.push_back(std::move(entries[e]));
      }
    }
    entries = std::move(kept);
  }
  out.records = std::move(records);
  return out;
}

namespace {

void assign_species(Visit& visit, const std::map<std::string, std::size_t>& votes) {
  std::size_t best = 0;
  std::size_t winners = 0;
  for (const auto& [label, n] : votes) {
    if (n > best) {
      best = n;
      winners = 1;
      visit.species = label;
    } else if (n == best) {
      ++winners;
    }
  }
  visit.species_tie = winners > 1;
}

}  // namespace

std::vector<Visit> stitch_visits(const std::vector<DetectionRecord>& records, double stitch_gap_s) {
  std::vector<Visit> visits;
  std::map<std::string, std::size_t> votes;
  Timestamp last{};
  bool open = false;

  for (const auto& r : records) {
    if (r.entries.empty()) continue;
    const bool joins = open && static_cast<double>((r.timestamp - last).count()) < stitch_gap_s;
    if (!joins) {
      if (open) assign_species(visits.back(), votes);
      votes.clear();
      Visit v;
      v.camera_id = r.camera_id;
      v.start = r.timestamp;
      visits.push_back(std::move(v));
      open = true;
    }
    Visit& v = visits.back();
    v.end = r.timestamp;
    v.member_refs.push_back(r.image_path);
    v.n_frames = v.member_refs.size();
    for (const auto& e : r.entries) ++votes[e.label.empty() ? std::string(kUnclassified) : e.label];
    last = r.timestamp;
  }
  if (open) assign_species(visits.back(), votes);
  return visits;
}

std::vector<DailyCount> daily_counts(const std::vector<Visit>& visits) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> counts;
  for (const auto& v : visits) ++counts[{format_date(v.start), v.camera_id, v.species}];
  std::vector<DailyCount> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), n});
  return out;
}

VisitsReport run_visits(std::vector<DetectionRecord> records, const VisitConfig& cfg, bool apply_taxon) {
  cfg.validate();
  sort_records(records);
  VisitsReport report;

  std::size_t in = count_entries(records);
  auto conf = filter_confidence(std::move(records), cfg.confidence_min);
  report.stages.push_back({"confidence", in, conf.dropped});
  records = std::move(conf.records);

  if (apply_taxon) {
    in = count_entries(records);
    auto tax = filter_taxon(std::move(records), cfg.taxon_keep);
    report.stages.push_back({"taxon_mismatch", in, tax.dropped});
    report.stages.push_back({"taxon_missing", in, tax.missing});
    records = std::move(tax.records);
  }

  in = count_entries(records);
  std::size_t static_dropped = 0;
  auto begin = records.begin();
  while (begin != records.end()) {
    auto end = std::find_if(begin, records.end(), [&](const DetectionRecord& r) { return r.camera_id != begin->camera_id; });
    std::vector<DetectionRecord> camera(std::make_move_iterator(begin), std::make_move_iterator(end));
    auto sup = suppress_static(std::move(camera), cfg.static_iou, cfg.static_run);
    static_dropped += sup.dropped;
    auto visits = stitch_visits(sup.records, cfg.stitch_gap_s);
    report.visits.insert(report.visits.end(), std::make_move_iterator(visits.begin()),
                         std::make_move_iterator(visits.end()));
    begin = end;
  }
  report.stages.push_back({"static", in, static_dropped});
  report.daily = daily_counts(report.visits);
  return report;
}

}  // namespace phenocam
