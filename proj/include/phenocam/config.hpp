#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "phenocam/phenology.hpp"
#include "phenocam/series.hpp"
#include "phenocam/visits.hpp"

namespace phenocam {

struct CameraSettings {
  GreennessConfig greenness;
  BerryConfig berries;
  bool berry_foreground_gate = false;
  DbscanParams dbscan;
  Scaling scaling = Scaling::ZScore;
  int greenness_degree = 3;
  int berry_degree = 2;
  VisitConfig visits;

  void validate() const;
};

// Site configuration: a "defaults" section plus per-camera overrides that are
// merged key by key over the defaults.
//
//   {
//     "defaults": {
//       "greenness": {"max_depth_m": 2.0, "green_a_max": -8, "min_foreground_fraction": 0.01},
//       "berries": {"hsv_red_low": {"hue": [0, 15], "s_min": 0.45, "v_min": 0.25},
//                   "hsv_red_high": {"hue": [345, 360], "s_min": 0.45, "v_min": 0.25},
//                   "lab_a_min": 25, "min_area_px2": 50, "centroid_match_px": 50,
//                   "morph_kernel": 3, "connectivity": 8, "foreground_gate": false},
//       "dbscan": {"eps": 0.5, "min_pts": 5, "scaling": "zscore"},
//       "degrees": {"greenness": 3, "berries": 2},
//       "visits": {"confidence_min": 0.2, "static_iou": 0.75, "static_run": 5,
//                  "stitch_gap_s": 15, "taxon_keep": ["Aves"]}
//     },
//     "cameras": {"cam02": {"greenness": {"max_depth_m": 1.5}}},
//     "jobs": 0,
//     "strict": false
//   }
//
// Hue intervals are closed except that an upper bound of 360 is excluded.
// Unknown keys are rejected.
struct SiteConfig {
  CameraSettings defaults;
  std::map<std::string, CameraSettings> cameras;
  int jobs = 0;  // 0: OpenMP default
  bool strict = false;

  const CameraSettings& for_camera(const std::string& camera_id) const;

  static SiteConfig from_json(const nlohmann::json& doc);
  static SiteConfig load(const std::filesystem::path& path);
};

}  // namespace phenocam
