#include "phenocam/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "phenocam/error.hpp"

namespace phenocam {

namespace {

// sRGB primaries, D65. The reference white is the image of (1,1,1) so that
// neutral inputs map to a = b = 0 exactly up to rounding.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhiteX = kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2];
constexpr double kWhiteY = kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2];
constexpr double kWhiteZ = kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2];

constexpr double kLabDelta = 6.0 / 29.0;

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
    return t;
  }();
  return table;
}

double lab_f(double t) {
  if (t > kLabDelta * kLabDelta * kLabDelta) return std::cbrt(t);
  return t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}

void check_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error("morphology kernel side must be odd and >= 1, got " + std::to_string(kernel));
  }
}

void check_predicate(const Predicate& predicate) {
  if (predicate.empty()) throw Error("degenerate threshold");
  for (const auto& iv : predicate) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi) || iv.lo > iv.hi) throw Error("degenerate threshold");
  }
}

bool passes(double value, const Predicate& predicate) {
  return std::any_of(predicate.begin(), predicate.end(), [value](const Interval& iv) { return iv.contains(value); });
}

BinaryMask pad(const BinaryMask& mask, int border) {
  BinaryMask out(mask.width() + 2 * border, mask.height() + 2 * border);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) out.set(x + border, y + border);
    }
  }
  return out;
}

BinaryMask crop(const BinaryMask& mask, int border, int width, int height) {
  BinaryMask out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (mask.at(x + border, y + border)) out.set(x, y);
    }
  }
  return out;
}

enum class MorphOp { Erode, Dilate };

// Separable square-window morphology: a horizontal pass into `rows`, then a
// vertical pass driven by per-column prefix counts.
BinaryMask morph_separable(const BinaryMask& mask, int kernel, MorphOp op) {
  check_kernel(kernel);
  const int w = mask.width();
  const int h = mask.height();
  const int r = kernel / 2;
  const auto src = mask.bits();

  std::vector<std::uint8_t> rows(src.size());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    std::vector<int> prefix(static_cast<std::size_t>(w) + 1, 0);
    const std::size_t base = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[base + x];
    for (int x = 0; x < w; ++x) {
      const int lo = x - r;
      const int hi = x + r;
      bool v;
      if (op == MorphOp::Erode) {
        v = lo >= 0 && hi < w && prefix[hi + 1] - prefix[lo] == kernel;
      } else {
        v = prefix[std::min(hi, w - 1) + 1] - prefix[std::max(lo, 0)] > 0;
      }
      rows[base + x] = v ? 1 : 0;
    }
  }

  std::vector<int> column_prefix((static_cast<std::size_t>(h) + 1) * w, 0);
  for (int y = 0; y < h; ++y) {
    const std::size_t cur = static_cast<std::size_t>(y) * w;
    const std::size_t next = cur + w;
#pragma omp simd
    for (int x = 0; x < w; ++x) column_prefix[next + x] = column_prefix[cur + x] + rows[cur + x];
  }

  BinaryMask out(w, h);
  auto dst = out.bits();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const int lo = y - r;
    const int hi = y + r;
    for (int x = 0; x < w; ++x) {
      bool v;
      if (op == MorphOp::Erode) {
        v = lo >= 0 && hi < h &&
            column_prefix[static_cast<std::size_t>(hi + 1) * w + x] - column_prefix[static_cast<std::size_t>(lo) * w + x] ==
                kernel;
      } else {
        const int clo = std::max(lo, 0);
        const int chi = std::min(hi, h - 1);
        v = column_prefix[static_cast<std::size_t>(chi + 1) * w + x] - column_prefix[static_cast<std::size_t>(clo) * w + x] > 0;
      }
      dst[static_cast<std::size_t>(y) * w + x] = v ? 1 : 0;
    }
  }
  return out;
}

struct DisjointSet {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

RgbImage::RgbImage(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw Error("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error("pixel count does not match image dimensions");
  }
}

LabPixel srgb_to_lab(Rgb p) {
  const auto& lin = linear_table();
  const double r = lin[p.r];
  const double g = lin[p.g];
  const double b = lin[p.b];
  const double x = kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b;
  const double y = kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b;
  const double z = kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

HsvPixel srgb_to_hsv(Rgb p) {
  const int mx = std::max({p.r, p.g, p.b});
  const int mn = std::min({p.r, p.g, p.b});
  const double delta = mx - mn;
  HsvPixel out;
  out.v = mx / 255.0;
  out.s = mx == 0 ? 0.0 : delta / mx;
  if (delta == 0) return out;

  double h;
  if (mx == p.r) {
    h = 60.0 * ((p.g - p.b) / delta);
  } else if (mx == p.g) {
    h = 60.0 * ((p.b - p.r) / delta + 2.0);
  } else {
    h = 60.0 * ((p.r - p.g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

double channel_value(Rgb p, Channel channel) {
  switch (channel) {
    case Channel::L:
      return srgb_to_lab(p).L;
    case Channel::A:
      return srgb_to_lab(p).a;
    case Channel::B:
      return srgb_to_lab(p).b;
    case Channel::Hue:
      return srgb_to_hsv(p).h;
    case Channel::Saturation:
      return srgb_to_hsv(p).s;
    case Channel::Value:
      return srgb_to_hsv(p).v;
  }
  return 0.0;
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error("mask dimensions must be non-negative");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask mask_and(const BinaryMask& lhs, const BinaryMask& rhs) {
  if (!lhs.same_shape(rhs)) throw Error("mask dimensions differ");
  BinaryMask out(lhs.width(), lhs.height());
  auto d = out.bits();
  auto a = lhs.bits();
  auto b = rhs.bits();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] & b[i];
  return out;
}

BinaryMask mask_or(const BinaryMask& lhs, const BinaryMask& rhs) {
  if (!lhs.same_shape(rhs)) throw Error("mask dimensions differ");
  BinaryMask out(lhs.width(), lhs.height());
  auto d = out.bits();
  auto a = lhs.bits();
  auto b = rhs.bits();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] | b[i];
  return out;
}

Box box_union(const Box& a, const Box& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min), std::max(a.x_max, b.x_max),
          std::max(a.y_max, b.y_max)};
}

double iou(const Box& a, const Box& b) {
  const double area_a = a.area();
  const double area_b = b.area();
  if (area_a <= 0.0 && area_b <= 0.0) return a == b ? 1.0 : 0.0;
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

std::vector<Component> connected_components(const BinaryMask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
  const int w = mask.width();
  const int h = mask.height();
  std::vector<int> labels(mask.size(), -1);
  DisjointSet sets;

  auto label_at = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= w) return -1;
    return labels[static_cast<std::size_t>(y) * w + x];
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int neighbours[4];
      int n = 0;
      neighbours[n++] = label_at(x - 1, y);
      neighbours[n++] = label_at(x, y - 1);
      if (connectivity == 8) {
        neighbours[n++] = label_at(x - 1, y - 1);
        neighbours[n++] = label_at(x + 1, y - 1);
      }
      int current = -1;
      for (int i = 0; i < n; ++i) {
        if (neighbours[i] < 0) continue;
        if (current < 0) {
          current = neighbours[i];
        } else {
          sets.unite(current, neighbours[i]);
        }
      }
      if (current < 0) current = sets.make();
      labels[static_cast<std::size_t>(y) * w + x] = current;
    }
  }

  struct Accum {
    std::size_t area = 0;
    double sum_x = 0.0;
    double sum_y = 0.0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  };
  std::vector<int> slot(sets.parent.size(), -1);
  std::vector<Accum> acc;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = labels[static_cast<std::size_t>(y) * w + x];
      if (l < 0) continue;
      const int root = sets.find(l);
      if (slot[root] < 0) {
        slot[root] = static_cast<int>(acc.size());
        acc.push_back({0, 0.0, 0.0, x, y, x, y});
      }
      Accum& a = acc[slot[root]];
      ++a.area;
      a.sum_x += x;
      a.sum_y += y;
      a.min_x = std::min(a.min_x, x);
      a.max_x = std::max(a.max_x, x);
      a.min_y = std::min(a.min_y, y);
      a.max_y = std::max(a.max_y, y);
    }
  }

  std::vector<Component> out;
  out.reserve(acc.size());
  for (const Accum& a : acc) {
    const double n = static_cast<double>(a.area);
    out.push_back({a.area, a.sum_x / n, a.sum_y / n,
                   Box{double(a.min_x), double(a.min_y), double(a.max_x + 1), double(a.max_y + 1)}});
  }
  return out;
}

BinaryMask threshold(const RgbImage& image, Channel channel, const Predicate& predicate) {
  check_predicate(predicate);
  BinaryMask out(image.width(), image.height());
  const auto src = image.pixels();
  auto dst = out.bits();
  const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    dst[i] = passes(channel_value(src[i], channel), predicate) ? 1 : 0;
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int kernel) { return morph_separable(mask, kernel, MorphOp::Erode); }

BinaryMask dilate(const BinaryMask& mask, int kernel) { return morph_separable(mask, kernel, MorphOp::Dilate); }

BinaryMask morph_open(const BinaryMask& mask, int kernel) { return dilate(erode(mask, kernel), kernel); }

// Closing is computed on a canvas padded by the kernel radius so the
// intermediate dilation may spill past the border before eroding back. The
// result never leaves the image rectangle, so cropping is exact.
BinaryMask morph_close(const BinaryMask& mask, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  return crop(erode(dilate(pad(mask, r), kernel), kernel), r, mask.width(), mask.height());
}

namespace reference {

BinaryMask threshold(const RgbImage& image, Channel channel, const Predicate& predicate) {
  check_predicate(predicate);
  BinaryMask out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (passes(channel_value(image.at(x, y), channel), predicate)) out.set(x, y);
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy) {
        for (int dx = -r; dx <= r && all; ++dx) {
          all = mask.contains(x + dx, y + dy) && mask.at(x + dx, y + dy);
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

BinaryMask dilate(const BinaryMask& mask, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy) {
        for (int dx = -r; dx <= r && !any; ++dx) {
          any = mask.contains(x + dx, y + dy) && mask.at(x + dx, y + dy);
        }
      }
      out.set(x, y, any);
    }
  }
  return out;
}

BinaryMask morph_open(const BinaryMask& mask, int kernel) {
  return reference::dilate(reference::erode(mask, kernel), kernel);
}

BinaryMask morph_close(const BinaryMask& mask, int kernel) {
  check_kernel(kernel);
  const int r = kernel / 2;
  return crop(reference::erode(reference::dilate(pad(mask, r), kernel), kernel), r, mask.width(), mask.height());
}

}  // namespace reference

}  // namespace phenocam
