// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "phenocam/imgproc.hpp"
#include "phenocam/phenology.hpp"
#include "phenocam/series.hpp"

using namespace phenocam;

namespace {

RgbImage noise_image(int w, int h) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> c(0, 255);
  RgbImage img(w, h);
  for (auto& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng))};
  }
  return img;
}

BinaryMask noise_mask(int w, int h) {
  std::mt19937 rng(11);
  std::bernoulli_distribution bit(0.4);
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, bit(rng));
  }
  return m;
}

std::vector<SeriesPoint> noise_points(std::size_t n) {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SeriesPoint> pts(n);
  for (auto& p : pts) p = {u(rng) * 365.0, u(rng), ""};
  return pts;
}

const Predicate kGreen{Interval::below(-8.0)};

void BM_threshold_serial(benchmark::State& st) {
  const auto img = noise_image(1280, 720);
  for (auto _ : st) benchmark::DoNotOptimize(reference::threshold(img, Channel::A, kGreen));
}
void BM_threshold_omp(benchmark::State& st) {
  const auto img = noise_image(1280, 720);
  for (auto _ : st) benchmark::DoNotOptimize(threshold(img, Channel::A, kGreen));
}

void BM_open_serial(benchmark::State& st) {
  const auto m = noise_mask(1280, 720);
  const int k = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(reference::morph_open(m, k));
}
void BM_open_omp(benchmark::State& st) {
  const auto m = noise_mask(1280, 720);
  const int k = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(morph_open(m, k));
}

void BM_dbscan_serial(benchmark::State& st) {
  const auto pts = noise_points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(reference::dbscan(pts, {0.1, 5}));
}
void BM_dbscan_omp(benchmark::State& st) {
  const auto pts = noise_points(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(dbscan(pts, {0.1, 5}));
}

void BM_greenness_serial(benchmark::State& st) {
  const auto img = noise_image(1280, 720);
  const auto fg = noise_mask(1280, 720);
  for (auto _ : st) benchmark::DoNotOptimize(reference::green_pixel_count(img, fg, -8.0));
}
void BM_greenness_omp(benchmark::State& st) {
  const Frame frame{"cam", {}, noise_image(1280, 720), ""};
  const auto fg = noise_mask(1280, 720);
  const GreennessConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(greenness_score(frame, fg, cfg));
}

}  // namespace

BENCHMARK(BM_threshold_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_threshold_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_open_serial)->Arg(3)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_open_omp)->Arg(3)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dbscan_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dbscan_omp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_greenness_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_greenness_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
