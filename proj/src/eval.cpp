#include "phenocam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "phenocam/error.hpp"

namespace phenocam {

namespace {

void check_universe(const ImageEntries& pred, const ImageEntries& gt) {
  std::vector<std::string> only_pred;
  std::vector<std::string> only_gt;
  for (const auto& [image, _] : pred) {
    if (!gt.contains(image)) only_pred.push_back(image);
  }
  for (const auto& [image, _] : gt) {
    if (!pred.contains(image)) only_gt.push_back(image);
  }
  if (only_pred.empty() && only_gt.empty()) return;
  std::string msg = "prediction and ground-truth image sets differ;";
  for (const auto& s : only_pred) msg += " predicted-only: " + s + ";";
  for (const auto& s : only_gt) msg += " ground-truth-only: " + s + ";";
  msg.pop_back();
  throw Error(msg);
}

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) by the modified Lentz method, valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

ImageEntries by_image(const std::vector<DetectionRecord>& records) {
  ImageEntries out;
  for (const auto& r : records) {
    auto& dst = out[r.image_path];
    dst.insert(dst.end(), r.entries.begin(), r.entries.end());
  }
  return out;
}

std::vector<DetectionRecord> suppress_per_camera(std::vector<DetectionRecord> records, const VisitConfig& cfg) {
  sort_records(records);
  std::vector<DetectionRecord> out;
  auto begin = records.begin();
  while (begin != records.end()) {
    const std::string camera = begin->camera_id;
    auto end = std::find_if(begin, records.end(), [&](const DetectionRecord& r) { return r.camera_id != camera; });
    auto sup = suppress_static(std::vector<DetectionRecord>(begin, end), cfg.static_iou, cfg.static_run);
    out.insert(out.end(), std::make_move_iterator(sup.records.begin()), std::make_move_iterator(sup.records.end()));
    begin = end;
  }
  return out;
}

}  // namespace

MatchResult match_detections(const ImageEntries& pred, const ImageEntries& gt, double iou_min) {
  check_universe(pred, gt);
  MatchResult result;
  for (const auto& [image, truths] : gt) {
    const auto& preds = pred.at(image);
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return preds[a].confidence > preds[b].confidence; });

    std::vector<bool> taken(truths.size(), false);
    for (const std::size_t p : order) {
      double best = -1.0;
      std::size_t best_gt = truths.size();
      for (std::size_t g = 0; g < truths.size(); ++g) {
        if (taken[g]) continue;
        const double v = iou(preds[p].bbox, truths[g].bbox);
        if (v > best) {
          best = v;
          best_gt = g;
        }
      }
      if (best_gt < truths.size() && best > iou_min) {
        taken[best_gt] = true;
        ++result.tp;
        result.matched_pairs.push_back({image + "#" + std::to_string(p), image + "#" + std::to_string(best_gt), best});
      } else {
        ++result.fp;
      }
    }
    result.fn += static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
  }
  return result;
}

PrfScores prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfScores s;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw Error("gamma_q requires a > 0");
  if (x < 0.0 || std::isnan(x)) throw Error("gamma_q requires x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double statistic, int degrees_of_freedom) {
  if (degrees_of_freedom < 1) throw Error("chi-square needs at least one degree of freedom");
  if (statistic <= 0.0) return 1.0;
  return std::clamp(gamma_q(0.5 * degrees_of_freedom, 0.5 * statistic), 0.0, 1.0);
}

ChiSquareResult chi_square(const ContingencyTable& table) {
  const std::size_t r = table.counts.size();
  if (r < 2) throw Error("degenerate table");
  const std::size_t c = table.counts.front().size();
  if (c < 2) throw Error("degenerate table");
  std::vector<double> row_sum(r, 0.0);
  std::vector<double> col_sum(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (table.counts[i].size() != c) throw Error("degenerate table");
    for (std::size_t j = 0; j < c; ++j) {
      const double o = table.counts[i][j];
      if (!(o >= 0.0) || !std::isfinite(o)) throw Error("degenerate table");
      row_sum[i] += o;
      col_sum[j] += o;
      total += o;
    }
  }
  for (double s : row_sum) {
    if (!(s > 0.0)) throw Error("degenerate table");
  }
  for (double s : col_sum) {
    if (!(s > 0.0)) throw Error("degenerate table");
  }

  ChiSquareResult res;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = table.counts[i][j] - expected;
      res.statistic += diff * diff / expected;
    }
  }
  res.degrees_of_freedom = static_cast<int>((r - 1) * (c - 1));
  res.p_value = chi_square_sf(res.statistic, res.degrees_of_freedom);
  return res;
}

std::vector<EvalRow> evaluate_methods(const std::vector<DetectionRecord>& predictions,
                                      const std::vector<DetectionRecord>& ground_truth, double iou_min,
                                      const VisitConfig& cfg) {
  cfg.validate();
  if (ground_truth.empty()) throw Error("ground truth is empty");
  const ImageEntries gt = by_image(ground_truth);

  std::set<std::string> detectors;
  for (const auto& r : predictions) detectors.insert(r.detector);
  if (detectors.empty()) throw Error("no predictions");

  std::vector<EvalRow> rows;
  for (const auto& detector : detectors) {
    std::vector<DetectionRecord> recs;
    for (const auto& r : predictions) {
      if (r.detector == detector) recs.push_back(r);
    }
    auto add = [&](const std::string& method, const std::vector<DetectionRecord>& stage) {
      EvalRow row{method, match_detections(by_image(stage), gt, iou_min), {}};
      row.scores = prf(row.match);
      rows.push_back(std::move(row));
    };

    auto base = filter_confidence(std::move(recs), cfg.confidence_min).records;
    add(detector, base);

    const bool has_taxon = std::any_of(base.begin(), base.end(), [](const DetectionRecord& r) {
      return std::any_of(r.entries.begin(), r.entries.end(), [](const DetectionEntry& e) { return e.taxon_class.has_value(); });
    });
    if (has_taxon) {
      auto taxon = filter_taxon(base, cfg.taxon_keep).records;
      add(detector + "+taxon", taxon);
      add(detector + "+taxon+static", suppress_per_camera(std::move(taxon), cfg));
    }
  }
  return rows;
}

}  // namespace phenocam
