#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "phenocam/visits.hpp"

namespace phenocam {

// Entries per image path.
using ImageEntries = std::map<std::string, std::vector<DetectionEntry>>;

struct MatchedPair {
  std::string pred_ref;  // "<image>#<entry index>"
  std::string gt_ref;
  double iou = 0.0;
};

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> matched_pairs;
};

// Per image, predictions are taken by descending confidence (input order on
// ties); each claims the unmatched ground-truth box of highest IoU (lowest index
// on ties) when that IoU exceeds iou_min. Both maps must cover the same images;
// otherwise Error lists the unmatched ones.
MatchResult match_detections(const ImageEntries& pred, const ImageEntries& gt, double iou_min = 0.1);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrfScores prf(std::size_t tp, std::size_t fp, std::size_t fn);
inline PrfScores prf(const MatchResult& m) { return prf(m.tp, m.fp, m.fn); }

struct ContingencyTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> counts;  // counts[row][column]
};

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

// Pearson test of independence. Throws Error("degenerate table") for tables
// smaller than 2x2, negative counts, or any zero row/column total.
ChiSquareResult chi_square(const ContingencyTable& table);

// Upper regularized incomplete gamma Q(a, x).
double gamma_q(double a, double x);

// Survival function of the chi-square distribution.
double chi_square_sf(double statistic, int degrees_of_freedom);

struct EvalRow {
  std::string method;  // "<detector>", "<detector>+taxon", "<detector>+taxon+static"
  MatchResult match;
  PrfScores scores;
};

// One row per (detector, filter stage) present: the confidence-filtered
// detector, then with the taxon filter when any entry carries a taxon_class,
// then additionally with static suppression.
std::vector<EvalRow> evaluate_methods(const std::vector<DetectionRecord>& predictions,
                                      const std::vector<DetectionRecord>& ground_truth, double iou_min,
                                      const VisitConfig& cfg);

}  // namespace phenocam
