#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phenocam/imgproc.hpp"
#include "phenocam/timeutil.hpp"

namespace phenocam {

struct Frame {
  std::string camera_id;
  Timestamp timestamp;
  RgbImage image;
  std::string image_path;
};

// Per-pixel metric depth. Invalid pixels carry depth 0 and valid() == false.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, std::vector<float> depth_m, std::vector<std::uint8_t> valid);
  // Uniform valid depth, mostly for fixtures.
  DepthMap(int width, int height, float depth_m);

  int width() const { return width_; }
  int height() const { return height_; }
  float depth(int x, int y) const { return depth_[index(x, y)]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
  void set(int x, int y, float depth_m);
  void invalidate(int x, int y);

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> depth_;
  std::vector<std::uint8_t> valid_;
};

struct GreennessConfig {
  double max_depth_m = 2.0;
  double green_a_max = -8.0;
  double min_foreground_fraction = 0.01;

  void validate() const;
};

struct Foreground {
  BinaryMask mask;
  double fraction = 0.0;
  // Foreground fraction fell below min_foreground_fraction; the frame should
  // not enter the greenness series.
  bool insufficient = false;
};

// True where depth is valid and <= max_depth_m. Throws Error on a size mismatch.
Foreground extract_foreground(const Frame& frame, const DepthMap& depth, const GreennessConfig& cfg);

// Fraction of foreground pixels whose CIELAB a is strictly below green_a_max.
// Throws Error("no foreground") when the mask is empty.
double greenness_score(const Frame& frame, const BinaryMask& foreground, const GreennessConfig& cfg);

struct HueBand {
  Interval hue;
  double s_min = 0.0;
  double v_min = 0.0;

  bool contains(const HsvPixel& p) const { return hue.contains(p.h) && p.s >= s_min && p.v >= v_min; }
};

struct BerryConfig {
  HueBand hsv_red_low{Interval::closed(0.0, 15.0), 0.45, 0.25};
  HueBand hsv_red_high{Interval::half_open(345.0, 360.0), 0.45, 0.25};
  double lab_a_min = 25.0;
  std::size_t min_area_px2 = 50;
  double centroid_match_px = 50.0;
  int morph_kernel = 3;
  int connectivity = 8;

  void validate() const;
};

struct BerryPair {
  Component hsv;
  Component lab;
  Box box;  // union of the two component boxes
};

struct BerryDetection {
  std::vector<BerryPair> pairs;
  std::vector<Box> boxes;
  std::size_t count = 0;
};

// Intermediate masks of the berry pipeline, exposed for inspection and tests.
struct BerryMasks {
  BinaryMask hsv;
  BinaryMask lab;
};

BerryMasks berry_masks(const RgbImage& image, const BerryConfig& cfg);

BerryDetection detect_berries(const Frame& frame, const BerryConfig& cfg);
// Restricts both color masks to `gate` (e.g. a depth foreground) before cleaning.
BerryDetection detect_berries(const Frame& frame, const BerryConfig& cfg, const BinaryMask& gate);

// Greedy pairing by ascending centroid distance; ties go to the lower HSV then
// LAB index. Returns (hsv index, lab index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_centroids(const std::vector<Component>& hsv,
                                                                 const std::vector<Component>& lab,
                                                                 double max_distance);

namespace reference {

std::size_t green_pixel_count(const RgbImage& image, const BinaryMask& foreground, double green_a_max);

}  // namespace reference

}  // namespace phenocam
