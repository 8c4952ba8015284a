#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "phenocam/imgproc.hpp"
#include "phenocam/phenology.hpp"
#include "phenocam/visits.hpp"

namespace fixture {

inline constexpr phenocam::Rgb kRed{230, 30, 30};
inline constexpr phenocam::Rgb kLeafGreen{40, 140, 40};
inline constexpr phenocam::Rgb kPureGreen{0, 255, 0};
inline constexpr phenocam::Rgb kGray{128, 128, 128};

inline void paint_disk(phenocam::RgbImage& img, int cx, int cy, int radius, phenocam::Rgb colour) {
  for (int y = cy - radius; y <= cy + radius; ++y) {
    for (int x = cx - radius; x <= cx + radius; ++x) {
      if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) continue;
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) img.at(x, y) = colour;
    }
  }
}

// Up to 20 disks on a 5-column grid with 60 px spacing.
inline phenocam::RgbImage disk_scene(std::size_t n, int radius, int offset_x = 0, int offset_y = 0) {
  phenocam::RgbImage img(320, 260, kLeafGreen);
  for (std::size_t i = 0; i < n; ++i) {
    const int col = static_cast<int>(i % 5);
    const int row = static_cast<int>(i / 5);
    paint_disk(img, 40 + 60 * col + offset_x, 40 + 60 * row + offset_y, radius, kRed);
  }
  return img;
}

inline phenocam::Frame frame_of(phenocam::RgbImage img, std::string camera = "cam01") {
  return {std::move(camera), phenocam::Timestamp{}, std::move(img), "fixture.png"};
}

inline phenocam::BinaryMask random_mask(std::mt19937& rng, int w, int h, double density) {
  std::bernoulli_distribution bit(density);
  phenocam::BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  }
  return m;
}

inline phenocam::DetectionRecord record(const std::string& camera, long long seconds,
                                        std::vector<phenocam::DetectionEntry> entries,
                                        const std::string& detector = "owlv2") {
  phenocam::DetectionRecord r;
  r.camera_id = camera;
  r.timestamp = phenocam::Timestamp{std::chrono::seconds(1706745600 + seconds)};  // 2024-02-01T00:00:00Z
  r.image_path = camera + "_" + std::to_string(seconds) + ".jpg";
  r.detector = detector;
  r.entries = std::move(entries);
  return r;
}

inline phenocam::DetectionEntry entry(phenocam::Box box, double confidence = 0.9, std::string label = "bird",
                                      std::optional<std::string> taxon = std::nullopt) {
  return {box, confidence, std::move(label), std::move(taxon)};
}

}  // namespace fixture
