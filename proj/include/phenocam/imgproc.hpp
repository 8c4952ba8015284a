#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace phenocam {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit sRGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});
  RgbImage(int width, int height, std::vector<Rgb> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  std::span<Rgb> pixels() { return pixels_; }
  std::span<const Rgb> pixels() const { return pixels_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Hue in degrees [0,360), saturation and value in [0,1]. Hue is 0 for grays.
struct HsvPixel {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

LabPixel srgb_to_lab(Rgb p);
HsvPixel srgb_to_hsv(Rgb p);

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { bits_[index(x, y)] = value ? 1 : 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  // One byte per pixel, 0 or 1.
  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t count() const;
  bool same_shape(const BinaryMask& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

BinaryMask mask_and(const BinaryMask& lhs, const BinaryMask& rhs);
BinaryMask mask_or(const BinaryMask& lhs, const BinaryMask& rhs);

// Axis-aligned box in pixel coordinates, read as the half-open rectangle
// [x_min, x_max) x [y_min, y_max).
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

Box box_union(const Box& a, const Box& b);

// Intersection over union. Two zero-area boxes give 1 when identical, 0 otherwise.
double iou(const Box& a, const Box& b);

struct Component {
  std::size_t area = 0;
  double cx = 0.0;  // mean pixel x
  double cy = 0.0;  // mean pixel y
  Box bbox;         // [min_x, max_x + 1) x [min_y, max_y + 1)
};

// Connected components (4 or 8 connectivity), ordered by the scanline position
// of each component's first pixel.
std::vector<Component> connected_components(const BinaryMask& mask, int connectivity = 8);

enum class Channel { L, A, B, Hue, Saturation, Value };

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = true;
  bool hi_closed = true;

  bool contains(double v) const {
    return (lo_closed ? v >= lo : v > lo) && (hi_closed ? v <= hi : v < hi);
  }

  static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval half_open(double lo, double hi) { return {lo, hi, true, false}; }
  static Interval below(double hi) { return {-std::numeric_limits<double>::infinity(), hi, true, false}; }
  static Interval at_least(double lo) { return {lo, std::numeric_limits<double>::infinity(), true, true}; }
};

// Union of intervals; a pixel passes when its channel value lies in any of them.
using Predicate = std::vector<Interval>;

double channel_value(Rgb p, Channel channel);

// Throws Error("degenerate threshold") for an empty or malformed predicate.
BinaryMask threshold(const RgbImage& image, Channel channel, const Predicate& predicate);

BinaryMask erode(const BinaryMask& mask, int kernel);
BinaryMask dilate(const BinaryMask& mask, int kernel);

// Square structuring element of odd side `kernel`. Pixels outside the image are
// background for both operations.
BinaryMask morph_open(const BinaryMask& mask, int kernel);
BinaryMask morph_close(const BinaryMask& mask, int kernel);

// Serial per-pixel implementations of the data-parallel kernels above. They are
// the reference the OpenMP versions are tested and benchmarked against.
namespace reference {

BinaryMask threshold(const RgbImage& image, Channel channel, const Predicate& predicate);
BinaryMask erode(const BinaryMask& mask, int kernel);
BinaryMask dilate(const BinaryMask& mask, int kernel);
BinaryMask morph_open(const BinaryMask& mask, int kernel);
BinaryMask morph_close(const BinaryMask& mask, int kernel);

}  // namespace reference

}  // namespace phenocam
