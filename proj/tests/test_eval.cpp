#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "phenocam/error.hpp"
#include "phenocam/eval.hpp"

using namespace phenocam;
using fixture::entry;
using fixture::record;

TEST_CASE("match_detections examples") {
  const Box a{0, 0, 10, 10};
  const Box b{5, 0, 15, 10};

  SUBCASE("identical sets") {
    const ImageEntries e{{"x", {entry(a), entry({50, 50, 60, 60})}}, {"y", {entry(b)}}};
    const auto m = match_detections(e, e);
    CHECK(m.tp == 3);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
  }
  SUBCASE("no predictions") {
    const auto m = match_detections({{"x", {}}}, {{"x", {entry(a), entry(b), entry(a)}}});
    CHECK(m.fn == 3);
    CHECK(m.tp == 0);
  }
  SUBCASE("IoU one third clears 0.1") {
    const auto m = match_detections({{"x", {entry(b)}}}, {{"x", {entry(a)}}}, 0.1);
    REQUIRE(m.tp == 1);
    CHECK(m.matched_pairs[0].iou == doctest::Approx(1.0 / 3.0));
    CHECK(m.matched_pairs[0].pred_ref == "x#0");
    CHECK(m.matched_pairs[0].gt_ref == "x#0");
    CHECK(match_detections({{"x", {entry(b)}}}, {{"x", {entry(a)}}}, 0.5).tp == 0);
  }
  SUBCASE("IoU must exceed the floor strictly") {
    // IoU exactly 1/3 with floor 1/3.
    CHECK(match_detections({{"x", {entry(b)}}}, {{"x", {entry(a)}}}, 1.0 / 3.0).tp == 0);
  }
  SUBCASE("higher confidence claims first") {
    const ImageEntries pred{{"x", {entry(b, 0.3), entry({1, 0, 11, 10}, 0.9)}}};
    const auto m = match_detections(pred, {{"x", {entry(a)}}});
    REQUIRE(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.matched_pairs[0].pred_ref == "x#1");
  }
  SUBCASE("different image sets") {
    CHECK_THROWS_WITH_AS(match_detections({{"x", {}}, {"p", {}}}, {{"x", {}}, {"g", {}}}),
                         doctest::Contains("predicted-only: p"), Error);
    CHECK_THROWS_WITH_AS(match_detections({{"x", {}}}, {{"x", {}}, {"g", {}}}), doctest::Contains("ground-truth-only: g"),
                         Error);
  }
}

TEST_CASE("match_detections invariants") {
  std::mt19937 rng(404);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> xy(0.0, 100.0);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ImageEntries pred, gt;
    std::size_t np = 0, ng = 0;
    for (int img = 0; img < 4; ++img) {
      const std::string key = "i" + std::to_string(img);
      auto& p = pred[key];
      auto& g = gt[key];
      for (int k = count(rng); k > 0; --k, ++np) {
        const double x = xy(rng), y = xy(rng);
        p.push_back(entry({x, y, x + 20, y + 20}, conf(rng)));
      }
      for (int k = count(rng); k > 0; --k, ++ng) {
        const double x = xy(rng), y = xy(rng);
        g.push_back(entry({x, y, x + 20, y + 20}));
      }
    }
    const auto m = match_detections(pred, gt);
    REQUIRE(m.tp + m.fn == ng);
    REQUIRE(m.tp + m.fp == np);
    REQUIRE(m.matched_pairs.size() == m.tp);
    for (const auto& pair : m.matched_pairs) REQUIRE(pair.iou > 0.1);
  }
}

TEST_CASE("prf") {
  SUBCASE("detector comparison rows") {
    // tp/fp/fn chosen so that P and R round to the target values.
    struct Row {
      std::size_t tp, fp, fn;
      double p, r, f1;
    };
    for (const Row& row : {Row{588033, 162967, 194967, 0.783, 0.751, 0.767}, Row{124839, 18161, 49761, 0.873, 0.715, 0.786},
                           Row{1881, 32319, 319, 0.055, 0.855, 0.103}}) {
      const auto s = prf(row.tp, row.fp, row.fn);
      CHECK(std::abs(s.precision - row.p) < 5e-4);
      CHECK(std::abs(s.recall - row.r) < 5e-4);
      CHECK(std::abs(s.f1 - row.f1) <= 1e-3);
    }
  }
  SUBCASE("empty denominators") {
    const auto s = prf(0, 0, 0);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
    CHECK(prf(0, 5, 5).f1 == 0.0);
  }
  SUBCASE("F1 lies between precision and recall") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<std::size_t> n(0, 1000);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t tp = n(rng), fp = n(rng), fn = n(rng);
      const auto s = prf(tp, fp, fn);
      if (tp == 0) {
        REQUIRE(s.f1 == 0.0);
        continue;
      }
      REQUIRE(s.f1 > 0.0);
      REQUIRE(s.f1 >= std::min(s.precision, s.recall) - 1e-15);
      REQUIRE(s.f1 <= std::max(s.precision, s.recall) + 1e-15);
    }
  }
}

TEST_CASE("chi_square") {
  auto table = [](std::vector<std::vector<double>> counts) {
    ContingencyTable t;
    for (std::size_t i = 0; i < counts.size(); ++i) t.rows.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < counts[0].size(); ++j) t.columns.push_back("c" + std::to_string(j));
    t.counts = std::move(counts);
    return t;
  };

  SUBCASE("uniform table") {
    const auto r = chi_square(table({{10, 10}, {10, 10}}));
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.degrees_of_freedom == 1);
    CHECK(chi_square(table({{5, 10, 15}, {2, 4, 6}})).statistic == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("[[30,10],[10,30]]") {
    const auto r = chi_square(table({{30, 10}, {10, 30}}));
    CHECK(std::abs(r.statistic - oracle::chi_square_2x2(30, 10, 10, 30)) < 1e-9);
    CHECK(std::abs(r.statistic - 20.0) < 1e-9);
    CHECK(std::abs(r.p_value - 7.744216431044088e-06) < 1e-12);
    CHECK(r.p_value < 0.005);
  }
  SUBCASE("2x3 table against precomputed values") {
    const auto r = chi_square(table({{12, 5, 9}, {3, 14, 7}}));
    CHECK(r.degrees_of_freedom == 2);
    CHECK(std::abs(r.statistic - 9.848916160593793) < 1e-9);
    CHECK(std::abs(r.p_value - 0.007266663160924537) < 1e-10);
    CHECK(std::abs(r.p_value - oracle::chi_square_sf_df2(r.statistic)) < 1e-12);
  }
  SUBCASE("degenerate tables") {
    CHECK_THROWS_WITH_AS(chi_square(table({{1, 0}, {2, 0}})), "degenerate table", Error);
    CHECK_THROWS_WITH_AS(chi_square(table({{0, 0}, {2, 3}})), "degenerate table", Error);
    CHECK_THROWS_WITH_AS(chi_square(table({{1, 2}})), "degenerate table", Error);
    CHECK_THROWS_WITH_AS(chi_square(table({{1, -2}, {3, 4}})), "degenerate table", Error);
  }
  SUBCASE("invariant under row and column permutation") {
    std::mt19937 rng(12);
    std::uniform_int_distribution<int> cell(1, 50);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::vector<double>> c(3, std::vector<double>(4));
      for (auto& row : c) {
        for (auto& v : row) v = cell(rng);
      }
      const auto base = chi_square(table(c));
      auto swapped = c;
      std::swap(swapped[0], swapped[2]);
      for (auto& row : swapped) std::swap(row[1], row[3]);
      const auto r = chi_square(table(swapped));
      REQUIRE(r.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
      REQUIRE(r.degrees_of_freedom == 6);
    }
  }
}

TEST_CASE("chi-square survival function") {
  struct Case {
    double x;
    int df;
    double want;
  };
  // Reference values from an established statistics library.
  for (const Case& c : {Case{0.5, 1, 0.47950012218695337}, Case{3.84, 1, 0.05004352124870519},
                        Case{10, 4, 0.04042768199451279}, Case{25, 7, 0.0007588002556582502},
                        Case{2, 10, 0.9963401531726563}, Case{30, 10, 0.000856641210775301},
                        Case{0.001, 3, 0.9999915920809419}}) {
    CHECK(std::abs(chi_square_sf(c.x, c.df) - c.want) < 1e-8);
  }
  for (double x = 0.0; x < 60.0; x += 0.37) {
    REQUIRE(std::abs(chi_square_sf(x, 1) - oracle::chi_square_sf_df1(x)) < 1e-8);
    REQUIRE(std::abs(chi_square_sf(x, 2) - oracle::chi_square_sf_df2(x)) < 1e-8);
  }
  for (int df = 1; df <= 10; ++df) {
    double prev = 1.0;
    for (double x = 0.0; x < 80.0; x += 0.5) {
      const double p = chi_square_sf(x, df);
      REQUIRE(p <= prev);
      REQUIRE(p >= 0.0);
      prev = p;
    }
  }
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK_THROWS_AS(gamma_q(0.0, 1.0), Error);
}

TEST_CASE("evaluate_methods") {
  const Box a{10, 10, 50, 50};
  std::vector<DetectionRecord> gt{record("c", 0, {entry(a, 1.0, "omao")}), record("c", 100, {entry(a, 1.0, "omao")})};

  SUBCASE("predictions equal ground truth") {
    const auto rows = evaluate_methods(gt, gt, 0.1, {});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method == "owlv2");
    CHECK(rows[0].scores.f1 == 1.0);
  }
  SUBCASE("taxon stages appear when taxa are present") {
    std::vector<DetectionRecord> pred{record("c", 0, {entry(a, 0.8, "bird", "Aves"), entry({200, 200, 220, 220}, 0.9, "leaf", "Plantae")}),
                                      record("c", 100, {entry(a, 0.1, "bird", "Aves")})};
    const auto rows = evaluate_methods(pred, gt, 0.1, {});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].method == "owlv2");
    CHECK(rows[1].method == "owlv2+taxon");
    CHECK(rows[2].method == "owlv2+taxon+static");
    CHECK(rows[0].match.tp == 1);
    CHECK(rows[0].match.fp == 1);
    CHECK(rows[0].match.fn == 1);
    CHECK(rows[1].match.fp == 0);
  }
  SUBCASE("empty ground truth") { CHECK_THROWS_WITH_AS(evaluate_methods(gt, {}, 0.1, {}), "ground truth is empty", Error); }
}
