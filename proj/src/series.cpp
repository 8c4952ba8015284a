#include "phenocam/series.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "phenocam/error.hpp"

namespace phenocam {

namespace {

constexpr int kUnvisited = -2;

struct Plane {
  std::vector<double> x;
  std::vector<double> y;
};

void standardize(std::vector<double>& v) {
  if (v.empty()) return;
  // Summed in sorted order so the scaling is independent of input order.
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : sorted) ss += (e - mean) * (e - mean);
  double sd = std::sqrt(ss / n);
  if (!(sd > 0.0) || !std::isfinite(sd)) sd = 1.0;
  for (double& e : v) e = (e - mean) / sd;
}

Plane to_plane(std::span<const SeriesPoint> points, Scaling scaling) {
  Plane p;
  p.x.reserve(points.size());
  p.y.reserve(points.size());
  for (const auto& pt : points) {
    if (!std::isfinite(pt.t) || !std::isfinite(pt.value)) throw Error("series point is not finite");
    p.x.push_back(pt.t);
    p.y.push_back(pt.value);
  }
  if (scaling == Scaling::ZScore) {
    standardize(p.x);
    standardize(p.y);
  }
  return p;
}

bool within(const Plane& p, std::size_t i, std::size_t j, double eps2) {
  const double dx = p.x[i] - p.x[j];
  const double dy = p.y[i] - p.y[j];
  return dx * dx + dy * dy <= eps2;
}

std::vector<std::size_t> region_query(const Plane& p, std::size_t i, double eps2) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < p.x.size(); ++j) {
    if (within(p, i, j, eps2)) out.push_back(j);
  }
  return out;
}

// Cluster expansion shared by both implementations; `neighbours(i)` returns
// the eps-neighbourhood of point i, itself included.
template <typename Neighbours>
std::vector<int> expand_clusters(std::size_t n, std::size_t min_pts, Neighbours&& neighbours) {
  std::vector<int> labels(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    const auto seed = neighbours(i);
    if (seed.size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    std::deque<std::size_t> queue(seed.begin(), seed.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (labels[j] == kNoise) {
        labels[j] = cluster;
        continue;
      }
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      const auto more = neighbours(j);
      if (more.size() >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return labels;
}

// Householder QR least squares on a well-conditioned design matrix
// (row-major, rows x cols). Returns the solution or throws on rank loss.
std::vector<double> qr_solve(std::vector<double> a, std::vector<double> b, std::size_t rows, std::size_t cols) {
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * cols + c]; };
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));

  for (std::size_t k = 0; k < cols; ++k) {
    double norm = 0.0;
    for (std::size_t r = k; r < rows; ++r) norm += at(r, k) * at(r, k);
    norm = std::sqrt(norm);
    if (norm <= 1e-12 * std::max(scale, 1.0)) throw Error("underdetermined fit");
    const double alpha = at(k, k) > 0.0 ? -norm : norm;
    std::vector<double> v(rows - k);
    for (std::size_t r = k; r < rows; ++r) v[r - k] = at(r, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double e : v) vnorm2 += e * e;
    if (vnorm2 > 0.0) {
      for (std::size_t c = k; c < cols; ++c) {
        double dot = 0.0;
        for (std::size_t r = k; r < rows; ++r) dot += v[r - k] * at(r, c);
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t r = k; r < rows; ++r) at(r, c) -= f * v[r - k];
      }
      double dot = 0.0;
      for (std::size_t r = k; r < rows; ++r) dot += v[r - k] * b[r];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t r = k; r < rows; ++r) b[r] -= f * v[r - k];
    }
  }

  std::vector<double> x(cols, 0.0);
  for (std::size_t k = cols; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < cols; ++c) s -= at(k, c) * x[c];
    x[k] = s / at(k, k);
  }
  return x;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

void DbscanParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("dbscan.eps must be > 0");
  if (min_pts < 1) throw Error("dbscan.min_pts must be >= 1");
}

std::vector<int> dbscan(std::span<const SeriesPoint> points, const DbscanParams& params, Scaling scaling) {
  params.validate();
  const Plane plane = to_plane(points, scaling);
  const double eps2 = params.eps * params.eps;
  const auto n = static_cast<std::ptrdiff_t>(points.size());

  std::vector<std::vector<std::size_t>> neighbourhoods(points.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    neighbourhoods[i] = region_query(plane, static_cast<std::size_t>(i), eps2);
  }
  return expand_clusters(points.size(), params.min_pts,
                         [&](std::size_t i) -> const std::vector<std::size_t>& { return neighbourhoods[i]; });
}

std::vector<double> polyfit(std::span<const SeriesPoint> points, int degree) {
  if (degree < 0) throw Error("polynomial degree must be >= 0");
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!std::isfinite(p.t) || !std::isfinite(p.value)) throw Error("series point is not finite");
    distinct.insert(p.t);
  }
  const auto cols = static_cast<std::size_t>(degree) + 1;
  if (distinct.size() < cols) throw Error("underdetermined fit");

  // Fit in s = (t - centre) / half_range, then expand back to powers of t.
  const double lo = *distinct.begin();
  const double hi = *distinct.rbegin();
  const double centre = 0.5 * (lo + hi);
  const double half_range = hi > lo ? 0.5 * (hi - lo) : 1.0;

  const std::size_t rows = points.size();
  std::vector<double> a(rows * cols);
  std::vector<double> b(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = (points[r].t - centre) / half_range;
    double pw = 1.0;
    for (std::size_t c = 0; c < cols; ++c) {
      a[r * cols + c] = pw;
      pw *= s;
    }
    b[r] = points[r].value;
  }
  const std::vector<double> scaled = qr_solve(std::move(a), std::move(b), rows, cols);

  std::vector<double> raw(cols, 0.0);
  for (int k = 0; k <= degree; ++k) {
    const double ck = scaled[k] / std::pow(half_range, k);
    for (int j = 0; j <= k; ++j) raw[j] += ck * binomial(k, j) * std::pow(-centre, k - j);
  }
  return raw;
}

double polyval(std::span<const double> coefficients, double t) {
  double acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * t + coefficients[k];
  return acc;
}

double r_squared(std::span<const SeriesPoint> points, std::span<const double> coefficients) {
  if (points.size() < 2) throw Error("degenerate R²");
  double mean = 0.0;
  for (const auto& p : points) mean += p.value;
  mean /= static_cast<double>(points.size());
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (const auto& p : points) {
    ss_tot += (p.value - mean) * (p.value - mean);
    const double r = p.value - polyval(coefficients, p.t);
    ss_res += r * r;
  }
  if (!(ss_tot > 0.0)) throw Error("degenerate R²");
  return 1.0 - ss_res / ss_tot;
}

TrendFit fit_trend(std::span<const SeriesPoint> points, int degree, const DbscanParams& params, Scaling scaling) {
  if (points.empty()) throw Error("underdetermined fit");
  const auto labels = dbscan(points, params, scaling);

  TrendFit fit;
  fit.degree = degree;
  fit.inlier.resize(points.size());
  std::vector<SeriesPoint> inliers;
  for (std::size_t i = 0; i < points.size(); ++i) {
    fit.inlier[i] = labels[i] != kNoise;
    if (fit.inlier[i]) inliers.push_back(points[i]);
  }
  fit.inlier_count = inliers.size();
  fit.outlier_count = points.size() - inliers.size();

  // Canonical order so floating-point sums do not depend on input order.
  std::sort(inliers.begin(), inliers.end(), [](const SeriesPoint& a, const SeriesPoint& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.value != b.value) return a.value < b.value;
    return a.frame_ref < b.frame_ref;
  });
  fit.coefficients = polyfit(inliers, degree);
  fit.r_squared = r_squared(inliers, fit.coefficients);
  return fit;
}

namespace reference {

std::vector<int> dbscan(std::span<const SeriesPoint> points, const DbscanParams& params, Scaling scaling) {
  params.validate();
  const Plane plane = to_plane(points, scaling);
  const double eps2 = params.eps * params.eps;
  return expand_clusters(points.size(), params.min_pts,
                         [&](std::size_t i) { return region_query(plane, i, eps2); });
}

}  // namespace reference

}  // namespace phenocam
