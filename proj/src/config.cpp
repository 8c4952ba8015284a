#include "phenocam/config.hpp"

#include <fstream>
#include <initializer_list>

#include "phenocam/error.hpp"

namespace phenocam {

namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error("config: '" + where + "." + key + "' has the wrong type");
  }
}

HueBand read_band(const json& obj, const std::string& where, HueBand band) {
  only_keys(obj, where, {"hue", "s_min", "v_min"});
  if (const auto it = obj.find("hue"); it != obj.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw Error("config: '" + where + ".hue' must be [lo, hi]");
    }
    const double lo = (*it)[0].get<double>();
    const double hi = (*it)[1].get<double>();
    band.hue = hi >= 360.0 ? Interval::half_open(lo, hi) : Interval::closed(lo, hi);
  }
  read(obj, "s_min", where, band.s_min);
  read(obj, "v_min", where, band.v_min);
  return band;
}

CameraSettings parse_settings(const json& obj, const std::string& where) {
  only_keys(obj, where, {"greenness", "berries", "dbscan", "degrees", "visits"});
  CameraSettings s;

  if (const auto it = obj.find("greenness"); it != obj.end()) {
    const std::string w = where + ".greenness";
    only_keys(*it, w, {"max_depth_m", "green_a_max", "min_foreground_fraction"});
    read(*it, "max_depth_m", w, s.greenness.max_depth_m);
    read(*it, "green_a_max", w, s.greenness.green_a_max);
    read(*it, "min_foreground_fraction", w, s.greenness.min_foreground_fraction);
  }
  if (const auto it = obj.find("berries"); it != obj.end()) {
    const std::string w = where + ".berries";
    only_keys(*it, w,
              {"hsv_red_low", "hsv_red_high", "lab_a_min", "min_area_px2", "centroid_match_px", "morph_kernel",
               "connectivity", "foreground_gate"});
    if (it->contains("hsv_red_low")) s.berries.hsv_red_low = read_band((*it)["hsv_red_low"], w + ".hsv_red_low", s.berries.hsv_red_low);
    if (it->contains("hsv_red_high")) s.berries.hsv_red_high = read_band((*it)["hsv_red_high"], w + ".hsv_red_high", s.berries.hsv_red_high);
    read(*it, "lab_a_min", w, s.berries.lab_a_min);
    read(*it, "min_area_px2", w, s.berries.min_area_px2);
    read(*it, "centroid_match_px", w, s.berries.centroid_match_px);
    read(*it, "morph_kernel", w, s.berries.morph_kernel);
    read(*it, "connectivity", w, s.berries.connectivity);
    read(*it, "foreground_gate", w, s.berry_foreground_gate);
  }
  if (const auto it = obj.find("dbscan"); it != obj.end()) {
    const std::string w = where + ".dbscan";
    only_keys(*it, w, {"eps", "min_pts", "scaling"});
    read(*it, "eps", w, s.dbscan.eps);
    read(*it, "min_pts", w, s.dbscan.min_pts);
    std::string scaling = "zscore";
    read(*it, "scaling", w, scaling);
    if (scaling == "zscore") {
      s.scaling = Scaling::ZScore;
    } else if (scaling == "none") {
      s.scaling = Scaling::None;
    } else {
      throw Error("config: '" + w + ".scaling' must be \"zscore\" or \"none\"");
    }
  }
  if (const auto it = obj.find("degrees"); it != obj.end()) {
    const std::string w = where + ".degrees";
    only_keys(*it, w, {"greenness", "berries"});
    read(*it, "greenness", w, s.greenness_degree);
    read(*it, "berries", w, s.berry_degree);
  }
  if (const auto it = obj.find("visits"); it != obj.end()) {
    const std::string w = where + ".visits";
    only_keys(*it, w, {"confidence_min", "static_iou", "static_run", "stitch_gap_s", "taxon_keep"});
    read(*it, "confidence_min", w, s.visits.confidence_min);
    read(*it, "static_iou", w, s.visits.static_iou);
    read(*it, "static_run", w, s.visits.static_run);
    read(*it, "stitch_gap_s", w, s.visits.stitch_gap_s);
    read(*it, "taxon_keep", w, s.visits.taxon_keep);
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error("config: " + where + ": " + e.what());
  }
  return s;
}

}  // namespace

void CameraSettings::validate() const {
  greenness.validate();
  berries.validate();
  dbscan.validate();
  visits.validate();
  if (greenness_degree < 0 || berry_degree < 0) throw Error("polynomial degrees must be >= 0");
}

const CameraSettings& SiteConfig::for_camera(const std::string& camera_id) const {
  const auto it = cameras.find(camera_id);
  return it == cameras.end() ? defaults : it->second;
}

SiteConfig SiteConfig::from_json(const json& doc) {
  only_keys(doc, "<root>", {"defaults", "cameras", "jobs", "strict"});
  SiteConfig cfg;
  const json defaults = doc.value("defaults", json::object());
  cfg.defaults = parse_settings(defaults, "defaults");
  if (const auto it = doc.find("cameras"); it != doc.end()) {
    if (!it->is_object()) throw Error("config: 'cameras' must be an object");
    for (const auto& [camera, overrides] : it->items()) {
      json merged = defaults;
      merged.merge_patch(overrides);
      cfg.cameras.emplace(camera, parse_settings(merged, "cameras." + camera));
    }
  }
  read(doc, "jobs", "<root>", cfg.jobs);
  read(doc, "strict", "<root>", cfg.strict);
  if (cfg.jobs < 0) throw Error("config: 'jobs' must be >= 0");
  return cfg;
}

SiteConfig SiteConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

}  // namespace phenocam
