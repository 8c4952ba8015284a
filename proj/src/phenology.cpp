#include "phenocam/phenology.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "phenocam/error.hpp"

namespace phenocam {

DepthMap::DepthMap(int width, int height, std::vector<float> depth_m, std::vector<std::uint8_t> valid)
    : width_(width), height_(height), depth_(std::move(depth_m)), valid_(std::move(valid)) {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (width <= 0 || height <= 0) throw Error("depth map dimensions must be positive");
  if (depth_.size() != n || valid_.size() != n) throw Error("depth map buffer size does not match dimensions");
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i] && !(std::isfinite(depth_[i]) && depth_[i] > 0.0f)) {
      valid_[i] = 0;
      depth_[i] = 0.0f;
    }
  }
}

DepthMap::DepthMap(int width, int height, float depth_m)
    : DepthMap(width, height,
               std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), depth_m),
               std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 1)) {}

void DepthMap::set(int x, int y, float depth_m) {
  const bool ok = std::isfinite(depth_m) && depth_m > 0.0f;
  depth_[index(x, y)] = ok ? depth_m : 0.0f;
  valid_[index(x, y)] = ok ? 1 : 0;
}

void DepthMap::invalidate(int x, int y) {
  depth_[index(x, y)] = 0.0f;
  valid_[index(x, y)] = 0;
}

void GreennessConfig::validate() const {
  if (!(max_depth_m > 0.0)) throw Error("greenness.max_depth_m must be > 0");
  if (!(min_foreground_fraction >= 0.0 && min_foreground_fraction <= 1.0)) {
    throw Error("greenness.min_foreground_fraction must lie in [0,1]");
  }
  if (!std::isfinite(green_a_max)) throw Error("greenness.green_a_max must be finite");
}

void BerryConfig::validate() const {
  for (const HueBand* band : {&hsv_red_low, &hsv_red_high}) {
    if (!(band->hue.lo <= band->hue.hi) || band->hue.lo < 0.0 || band->hue.hi > 360.0) {
      throw Error("berries hue interval must satisfy 0 <= lo <= hi <= 360");
    }
    if (band->s_min < 0.0 || band->s_min > 1.0 || band->v_min < 0.0 || band->v_min > 1.0) {
      throw Error("berries saturation/value minima must lie in [0,1]");
    }
  }
  if (!std::isfinite(lab_a_min)) throw Error("berries.lab_a_min must be finite");
  if (min_area_px2 < 1) throw Error("berries.min_area_px2 must be >= 1");
  if (!(centroid_match_px >= 0.0)) throw Error("berries.centroid_match_px must be >= 0");
  if (morph_kernel < 1 || morph_kernel % 2 == 0) throw Error("berries.morph_kernel must be odd and >= 1");
  if (connectivity != 4 && connectivity != 8) throw Error("berries.connectivity must be 4 or 8");
}

Foreground extract_foreground(const Frame& frame, const DepthMap& depth, const GreennessConfig& cfg) {
  const int w = frame.image.width();
  const int h = frame.image.height();
  if (depth.width() != w || depth.height() != h) {
    throw Error("depth map " + std::to_string(depth.width()) + "x" + std::to_string(depth.height()) +
                " does not match image " + std::to_string(w) + "x" + std::to_string(h));
  }
  Foreground fg;
  fg.mask = BinaryMask(w, h);
  auto bits = fg.mask.bits();
  const float limit = static_cast<float>(cfg.max_depth_m);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bits[static_cast<std::size_t>(y) * w + x] = depth.valid(x, y) && depth.depth(x, y) <= limit ? 1 : 0;
    }
  }
  fg.fraction = static_cast<double>(fg.mask.count()) / static_cast<double>(fg.mask.size());
  fg.insufficient = fg.fraction < cfg.min_foreground_fraction || fg.mask.count() == 0;
  return fg;
}

double greenness_score(const Frame& frame, const BinaryMask& foreground, const GreennessConfig& cfg) {
  if (foreground.width() != frame.image.width() || foreground.height() != frame.image.height()) {
    throw Error("foreground mask does not match image dimensions");
  }
  const auto fg = foreground.bits();
  const auto px = frame.image.pixels();
  const auto n = static_cast<std::ptrdiff_t>(px.size());
  std::ptrdiff_t total = 0;
  std::ptrdiff_t green = 0;
#pragma omp parallel for schedule(static) reduction(+ : total, green)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (!fg[i]) continue;
    ++total;
    if (srgb_to_lab(px[i]).a < cfg.green_a_max) ++green;
  }
  if (total == 0) throw Error("no foreground");
  return static_cast<double>(green) / static_cast<double>(total);
}

BerryMasks berry_masks(const RgbImage& image, const BerryConfig& cfg) {
  BerryMasks masks{BinaryMask(image.width(), image.height()), BinaryMask(image.width(), image.height())};
  const auto px = image.pixels();
  auto hsv = masks.hsv.bits();
  auto lab = masks.lab.bits();
  const auto n = static_cast<std::ptrdiff_t>(px.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const HsvPixel p = srgb_to_hsv(px[i]);
    hsv[i] = cfg.hsv_red_low.contains(p) || cfg.hsv_red_high.contains(p) ? 1 : 0;
    lab[i] = srgb_to_lab(px[i]).a >= cfg.lab_a_min ? 1 : 0;
  }
  return masks;
}

std::vector<std::pair<std::size_t, std::size_t>> match_centroids(const std::vector<Component>& hsv,
                                                                 const std::vector<Component>& lab,
                                                                 double max_distance) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < hsv.size(); ++i) {
    for (std::size_t j = 0; j < lab.size(); ++j) {
      const double d = std::hypot(hsv[i].cx - lab[j].cx, hsv[i].cy - lab[j].cy);
      if (d <= max_distance) candidates.emplace_back(d, i, j);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_hsv(hsv.size(), false);
  std::vector<bool> used_lab(lab.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [d, i, j] : candidates) {
    if (used_hsv[i] || used_lab[j]) continue;
    used_hsv[i] = true;
    used_lab[j] = true;
    out.emplace_back(i, j);
  }
  return out;
}

namespace {

std::vector<Component> cleaned_components(const BinaryMask& mask, const BerryConfig& cfg) {
  const BinaryMask cleaned = morph_close(morph_open(mask, cfg.morph_kernel), cfg.morph_kernel);
  auto comps = connected_components(cleaned, cfg.connectivity);
  std::erase_if(comps, [&](const Component& c) { return c.area < cfg.min_area_px2; });
  return comps;
}

BerryDetection pair_masks(const BerryMasks& masks, const BerryConfig& cfg) {
  const auto hsv = cleaned_components(masks.hsv, cfg);
  const auto lab = cleaned_components(masks.lab, cfg);
  BerryDetection det;
  for (const auto& [i, j] : match_centroids(hsv, lab, cfg.centroid_match_px)) {
    const Box merged = box_union(hsv[i].bbox, lab[j].bbox);
    det.pairs.push_back({hsv[i], lab[j], merged});
    det.boxes.push_back(merged);
  }
  det.count = det.boxes.size();
  return det;
}

}  // namespace

BerryDetection detect_berries(const Frame& frame, const BerryConfig& cfg) {
  return pair_masks(berry_masks(frame.image, cfg), cfg);
}

BerryDetection detect_berries(const Frame& frame, const BerryConfig& cfg, const BinaryMask& gate) {
  BerryMasks masks = berry_masks(frame.image, cfg);
  masks.hsv = mask_and(masks.hsv, gate);
  masks.lab = mask_and(masks.lab, gate);
  return pair_masks(masks, cfg);
}

namespace reference {

std::size_t green_pixel_count(const RgbImage& image, const BinaryMask& foreground, double green_a_max) {
  std::size_t green = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (foreground.at(x, y) && srgb_to_lab(image.at(x, y)).a < green_a_max) ++green;
    }
  }
  return green;
}

}  // namespace reference

}  // namespace phenocam
