#include <doctest.h>

#include <regex>
#include <sstream>

#include "cli_fixtures.hpp"
#include "phenocam/commands.hpp"
#include "phenocam/config.hpp"
#include "phenocam/error.hpp"
#include "phenocam/io.hpp"
#include "phenocam/plot.hpp"
#include "phenocam/series.hpp"

using namespace phenocam;
namespace fs = std::filesystem;
using fixture::read_file;
using fixture::scratch_dir;
using fixture::write_file;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Vertices of the first polyline inside the group whose opening tag contains `group`.
std::vector<std::pair<double, double>> polyline_in(const std::string& svg, const std::string& group) {
  const auto g = svg.find(group);
  REQUIRE(g != std::string::npos);
  const auto p = svg.find("points=\"", g) + 8;
  const auto e = svg.find('"', p);
  std::vector<std::pair<double, double>> out;
  std::istringstream in(svg.substr(p, e - p));
  for (std::string v; in >> v;) {
    const auto comma = v.find(',');
    out.emplace_back(std::stod(v.substr(0, comma)), std::stod(v.substr(comma + 1)));
  }
  return out;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("io: image and depth round trip") {
  const fs::path dir = scratch_dir("io");
  RgbImage img(7, 5, fixture::kGray);
  img.at(3, 2) = fixture::kRed;
  io::save_png(dir / "a.png", img);
  const RgbImage back = io::load_image(dir / "a.png");
  REQUIRE(back.width() == 7);
  CHECK(back.at(3, 2) == fixture::kRed);
  CHECK(back.at(0, 0) == fixture::kGray);

  DepthMap d(4, 3, 1.25f);
  d.invalidate(1, 1);
  io::save_depth_png(dir / "a.depth.png", d);
  const DepthMap dd = io::load_depth(dir / "a.depth.png");
  CHECK(dd.depth(0, 0) == doctest::Approx(1.25));
  CHECK_FALSE(dd.valid(1, 1));

  write_file(dir / "a.depth.json", R"({"units": "cm"})");
  CHECK(io::load_depth(dir / "a.depth.png").depth(0, 0) == doctest::Approx(12.5));

  write_file(dir / "broken.png", "not an image");
  CHECK_THROWS_WITH_AS(io::load_image(dir / "broken.png"), doctest::Contains("broken.png"), Error);
  CHECK(io::depth_path_for(dir / "x.jpg", "/d") == fs::path("/d/x.depth.png"));
}

TEST_CASE("io: frame names, manifest and csv") {
  std::string cam;
  Timestamp t;
  REQUIRE(io::parse_frame_name("north_cam_20240203_141516", cam, t));
  CHECK(cam == "north_cam");
  CHECK(format_timestamp(t) == "2024-02-03T14:15:16Z");
  CHECK_FALSE(io::parse_frame_name("holiday", cam, t));
  CHECK_FALSE(io::parse_frame_name("cam_20241303_000000", cam, t));

  const fs::path dir = scratch_dir("frames");
  fixture::write_greenness_fixture(dir);
  io::save_png(dir / "IMG_0001.png", RgbImage(2, 2));
  io::save_png(dir / "IMG_0002.png", RgbImage(2, 2));
  write_file(dir / "frames.csv", "image,camera_id,timestamp\nIMG_0001.png,cam00,2024-01-01T00:00:00Z\n");
  const auto listing = io::list_frames(dir);
  REQUIRE(listing.frames.size() == 4);
  CHECK(listing.frames[0].camera_id == "cam00");
  CHECK(listing.unresolved == std::vector<std::string>{"IMG_0002.png"});

  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(2.0) == "2");
  CHECK(io::csv_escape("a,b") == "\"a,b\"");
  CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  write_file(dir / "t.csv", "x,y\n\"a,b\",2\n");
  const auto table = io::read_csv(dir / "t.csv");
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0][0] == "a,b");
}

TEST_CASE("config") {
  SUBCASE("defaults and overrides") {
    const auto cfg = SiteConfig::from_json(nlohmann::json::parse(R"({
      "defaults": {"greenness": {"max_depth_m": 3.0}, "visits": {"taxon_keep": ["Aves", "Mammalia"]}},
      "cameras": {"cam02": {"greenness": {"green_a_max": -12}, "berries": {"hsv_red_high": {"hue": [340, 360]}}}}
    })"));
    CHECK(cfg.defaults.greenness.max_depth_m == 3.0);
    const auto& c2 = cfg.for_camera("cam02");
    CHECK(c2.greenness.max_depth_m == 3.0);
    CHECK(c2.greenness.green_a_max == -12.0);
    CHECK(c2.berries.hsv_red_high.hue.contains(340.0));
    CHECK_FALSE(c2.berries.hsv_red_high.hue.contains(360.0));
    CHECK(c2.visits.taxon_keep.contains("Mammalia"));
    CHECK(&cfg.for_camera("elsewhere") == &cfg.defaults);
  }
  SUBCASE("rejections") {
    auto bad = [](const char* text) { return SiteConfig::from_json(nlohmann::json::parse(text)); };
    CHECK_THROWS_WITH_AS(bad(R"({"defaults": {"greenes": {}}})"), doctest::Contains("greenes"), Error);
    CHECK_THROWS_AS(bad(R"({"defaults": {"dbscan": {"eps": -1}}})"), Error);
    CHECK_THROWS_AS(bad(R"({"defaults": {"visits": {"confidence_min": 2}}})"), Error);
    CHECK_THROWS_AS(bad(R"({"cameras": {"c": {"degrees": {"greenness": -1}}}})"), Error);
  }
}

TEST_CASE("cmd_greenness") {
  const fs::path dir = scratch_dir("greenness");
  write_file(dir / "site.json", fixture::kSmallSeriesConfig);
  cli::Options opt;
  opt.config = dir / "site.json";
  opt.images = dir / "images";
  opt.out = dir / "out";

  SUBCASE("three frames") {
    fs::create_directories(opt.images);
    fixture::write_greenness_fixture(opt.images);
    std::ostringstream diag;
    REQUIRE(cli::cmd_greenness(opt, diag) == 0);
    const auto rows = lines_of(read_file(opt.out / "greenness_series.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "timestamp,value,camera_id,metric,inlier");
    CHECK(rows[1] == "2024-02-01T12:00:00Z,0.2,cam01,greenness,1");
    CHECK(rows[2] == "2024-02-02T12:00:00Z,0.5,cam01,greenness,1");
    CHECK(rows[3] == "2024-02-03T12:00:00Z,0.8,cam01,greenness,1");
    const auto trend = plot::read_trend(opt.out / "greenness_trend.csv");
    REQUIRE(trend.size() == 1);
    CHECK(trend[0].coefficients[1] == doctest::Approx(0.3));
    CHECK(trend[0].r_squared == doctest::Approx(1.0));
  }
  SUBCASE("empty directory") {
    fs::create_directories(opt.images);
    std::ostringstream diag;
    CHECK(cli::cmd_greenness(opt, diag) == 0);
    CHECK(lines_of(read_file(opt.out / "greenness_series.csv")).size() == 1);
  }
  SUBCASE("corrupt image") {
    fixture::write_greenness_fixture(opt.images);
    write_file(opt.images / "cam01_20240204_120000.png", "garbage");
    fixture::write_greenness_frame(opt.images, "tmp", 0);
    fs::rename(opt.images / "tmp.depth.png", opt.images / "cam01_20240204_120000.depth.png");
    fs::remove(opt.images / "tmp.png");
    std::ostringstream diag;
    CHECK_THROWS_WITH_AS(cli::cmd_greenness(opt, diag), doctest::Contains("cam01_20240204_120000.png"), Error);
  }
  SUBCASE("missing depth map skips, strict fails") {
    fixture::write_greenness_fixture(opt.images);
    fs::remove(opt.images / "cam01_20240202_120000.depth.png");
    std::ostringstream diag;
    CHECK(cli::cmd_greenness(opt, diag) == 0);
    CHECK(diag.str().find("missing depth map") != std::string::npos);
    CHECK(lines_of(read_file(opt.out / "greenness_skipped.csv")).size() == 2);
    opt.strict = true;
    CHECK_THROWS_AS(cli::cmd_greenness(opt, diag), Error);
  }
  SUBCASE("default degree cannot be fitted to three frames") {
    fixture::write_greenness_fixture(opt.images);
    opt.config.clear();
    std::ostringstream diag;
    CHECK(cli::cmd_greenness(opt, diag) == 1);
    CHECK(diag.str().find("underdetermined fit") != std::string::npos);
    CHECK(lines_of(read_file(opt.out / "greenness_series.csv")).size() == 4);
  }
}

TEST_CASE("cmd_berries") {
  const fs::path dir = scratch_dir("berries");
  cli::Options opt;
  opt.images = dir / "images";
  opt.out = dir / "out";
  fs::create_directories(opt.images);

  SUBCASE("counts and trend") {
    write_file(dir / "site.json", fixture::kSmallSeriesConfig);
    opt.config = dir / "site.json";
    fixture::write_berry_fixture(opt.images, {7, 0, 3, 12});
    std::ostringstream diag;
    REQUIRE(cli::cmd_berries(opt, diag) == 0);
    const auto rows = plot::read_series(opt.out / "berries_series.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].value == 7.0);
    CHECK(rows[1].value == 0.0);
    CHECK(rows[2].value == 3.0);
    CHECK(rows[3].value == 12.0);
    CHECK(rows[0].metric == "berry_count");
    CHECK(lines_of(read_file(opt.out / "berries_boxes.csv")).size() == 1 + 22);
  }
  SUBCASE("fewer than three distinct days with the default quadratic") {
    fixture::write_berry_fixture(opt.images, {7, 2});
    std::ostringstream diag;
    CHECK(cli::cmd_berries(opt, diag) == 1);
    CHECK(diag.str().find("underdetermined fit") != std::string::npos);
  }
}

TEST_CASE("cmd_visits") {
  using fixture::entry;
  using fixture::record;
  const fs::path dir = scratch_dir("visits");
  cli::Options opt;
  opt.detections = dir / "det.jsonl";
  opt.out = dir / "out";
  const Box b{10, 10, 40, 40};

  SUBCASE("0/10/30 s") {
    write_file(opt.detections, fixture::jsonl({record("cam01", 30, {entry(b, 0.9, "omao")}),
                                              record("cam01", 0, {entry(b, 0.9, "omao")}),
                                              record("cam01", 10, {entry(b, 0.9, "omao")})}));
    std::ostringstream diag;
    REQUIRE(cli::cmd_visits(opt, diag) == 0);
    const auto v = lines_of(read_file(opt.out / "visits.csv"));
    REQUIRE(v.size() == 3);
    CHECK(v[0] == "camera_id,species,start,end,n_frames");
    CHECK(v[1] == "cam01,omao,2024-02-01T00:00:00Z,2024-02-01T00:00:10Z,2");
    CHECK(v[2] == "cam01,omao,2024-02-01T00:00:30Z,2024-02-01T00:00:30Z,1");
    CHECK(lines_of(read_file(opt.out / "daily_counts.csv"))[1] == "2024-02-01,cam01,omao,2");
  }
  SUBCASE("everything below the confidence floor") {
    write_file(opt.detections, fixture::jsonl({record("cam01", 0, {entry(b, 0.1)}), record("cam01", 5, {entry(b, 0.15)})}));
    std::ostringstream diag;
    REQUIRE(cli::cmd_visits(opt, diag) == 0);
    CHECK(lines_of(read_file(opt.out / "visits.csv")).size() == 1);
    const auto s = lines_of(read_file(opt.out / "visits_summary.csv"));
    CHECK(s[1] == "confidence,2,2");
  }
  SUBCASE("mixed detectors") {
    write_file(opt.detections, fixture::jsonl({record("cam01", 0, {entry(b)}, "owlv2"),
                                              record("cam01", 5, {entry(b)}, "gdino")}));
    std::ostringstream diag;
    CHECK_THROWS_WITH_AS(cli::cmd_visits(opt, diag), doctest::Contains("single detector per run"), Error);
  }
  SUBCASE("classifier output supplies taxa") {
    write_file(opt.detections, fixture::jsonl({record("cam01", 0, {entry(b, 0.9), entry({100, 100, 120, 130}, 0.9)})}));
    opt.classifier = dir / "cls.jsonl";
    write_file(opt.classifier, fixture::jsonl({record("cam01", 0,
                                                      {entry(b, 0.9, "omao", "Aves"),
                                                       entry({100, 100, 120, 130}, 0.9, "fern", "Plantae")},
                                                      "bioclip")}));
    std::ostringstream diag;
    REQUIRE(cli::cmd_visits(opt, diag) == 0);
    const auto s = lines_of(read_file(opt.out / "visits_summary.csv"));
    REQUIRE(s.size() == 5);
    CHECK(s[2] == "taxon_mismatch,2,1");
    CHECK(s[3] == "taxon_missing,2,0");
  }
}

TEST_CASE("cmd_eval") {
  const fs::path dir = scratch_dir("eval");
  cli::Options opt;
  opt.detections = dir / "pred.jsonl";
  opt.ground_truth = dir / "gt.jsonl";
  opt.out = dir / "out";

  SUBCASE("perfect predictions") {
    const auto recs = std::vector<DetectionRecord>{fixture::record("c", 0, {fixture::entry({0, 0, 9, 9})})};
    write_file(opt.detections, fixture::jsonl(recs));
    write_file(opt.ground_truth, fixture::jsonl(recs));
    std::ostringstream diag;
    REQUIRE(cli::cmd_eval(opt, diag) == 0);
    CHECK(lines_of(read_file(opt.out / "eval.csv"))[1] == "owlv2,1,1,1,1,0,0");
  }
  SUBCASE("owlv2 fixture") {
    fixture::write_owlv2_eval_fixture(opt.detections, opt.ground_truth);
    std::ostringstream diag;
    REQUIRE(cli::cmd_eval(opt, diag) == 0);
    const auto rows = io::read_csv(opt.out / "eval.csv").rows;
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][4] == "783");
    CHECK(rows[0][5] == "217");
    CHECK(rows[0][6] == "260");
    CHECK(std::abs(std::stod(rows[0][1]) - 0.783) < 5e-4);
    CHECK(std::abs(std::stod(rows[0][2]) - 0.751) < 5e-4);
    CHECK(std::abs(std::stod(rows[0][3]) - 0.767) <= 1e-3);
  }
  SUBCASE("empty ground truth") {
    write_file(opt.detections, fixture::jsonl({fixture::record("c", 0, {})}));
    write_file(opt.ground_truth, "");
    std::ostringstream diag;
    CHECK_THROWS_WITH_AS(cli::cmd_eval(opt, diag), doctest::Contains("ground truth is empty"), Error);
  }
  SUBCASE("different image sets") {
    write_file(opt.detections, fixture::jsonl({fixture::record("c", 0, {})}));
    write_file(opt.ground_truth, fixture::jsonl({fixture::record("c", 5, {})}));
    std::ostringstream diag;
    CHECK_THROWS_WITH_AS(cli::cmd_eval(opt, diag), doctest::Contains("ground-truth-only: c_5.jpg"), Error);
  }
}

TEST_CASE("cmd_plot") {
  const fs::path dir = scratch_dir("plot");
  cli::Options opt;
  opt.out = dir / "fig.svg";

  SUBCASE("two-point series") {
    opt.series = dir / "s.csv";
    write_file(opt.series,
               "timestamp,value,camera_id,metric,inlier\n"
               "2024-02-01T00:00:00Z,0.2,cam01,greenness,1\n"
               "2024-02-05T00:00:00Z,0.4,cam01,greenness,0\n");
    std::ostringstream diag;
    REQUIRE(cli::cmd_plot(opt, diag) == 0);
    const std::string svg = read_file(opt.out);
    CHECK(polyline_in(svg, "class=\"series\"").size() == 2);
    CHECK(count_of(svg, "class=\"inlier\"") == 1);
    CHECK(count_of(svg, "class=\"outlier\"") == 1);
  }
  SUBCASE("empty series") {
    opt.series = dir / "s.csv";
    write_file(opt.series, "timestamp,value,camera_id,metric,inlier\n");
    opt.out = dir;
    std::ostringstream diag;
    REQUIRE(cli::cmd_plot(opt, diag) == 0);
    const std::string svg = read_file(dir / "plot.svg");
    CHECK(svg.find("class=\"axes\"") != std::string::npos);
    CHECK(svg.find("<polyline") == std::string::npos);
  }
  SUBCASE("unknown column") {
    opt.series = dir / "s.csv";
    write_file(opt.series, "timestamp,value,camera_id,metric,inlier,colour\n");
    std::ostringstream diag;
    CHECK_THROWS_WITH_AS(cli::cmd_plot(opt, diag), doctest::Contains("unknown column"), Error);
  }
  SUBCASE("trend overlay is sampled at 200 points of the polynomial") {
    opt.trend = dir / "t.csv";
    write_file(opt.trend,
               "camera_id,metric,degree,t0,t_min,t_max,r_squared,inlier_count,outlier_count,coefficients\n"
               "cam01,greenness,2,2024-03-01T00:00:00Z,0,90,0.95,40,2,0.1;0.02;-0.0002\n");
    opt.visits = dir / "v.csv";
    write_file(opt.visits, "camera_id,species,start,end,n_frames\ncam01,omao,2024-03-10T08:00:00Z,2024-03-10T08:01:00Z,4\n");
    std::ostringstream diag;
    REQUIRE(cli::cmd_plot(opt, diag) == 0);
    const std::string svg = read_file(opt.out);
    const auto pts = polyline_in(svg, "class=\"trend\"");
    REQUIRE(pts.size() == 200);
    CHECK(count_of(svg, "class=\"visit\"") == 1);

    // Pixels are affine in (t, f(t)); recover the map from the end points and
    // check every vertex against direct evaluation.
    auto f = [](double t) { return 0.1 + 0.02 * t - 0.0002 * t * t; };
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double t = 90.0 * i / 199.0;
      if (f(t) < f(90.0 * lo / 199.0)) lo = i;
      if (f(t) > f(90.0 * hi / 199.0)) hi = i;
    }
    const double t_lo = 90.0 * lo / 199.0, t_hi = 90.0 * hi / 199.0;
    const double ay = (pts[hi].second - pts[lo].second) / (f(t_hi) - f(t_lo));
    const double ax = (pts.back().first - pts.front().first) / 90.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double t = 90.0 * i / 199.0;
      REQUIRE(std::abs(pts[i].first - (pts.front().first + ax * t)) < 0.02);
      REQUIRE(std::abs(pts[i].second - (pts[lo].second + ay * (f(t) - f(t_lo)))) < 0.02);
    }
  }
}

TEST_CASE("commands are byte-idempotent") {
  const fs::path dir = scratch_dir("idem");
  write_file(dir / "site.json", fixture::kSmallSeriesConfig);
  fixture::write_greenness_fixture(dir / "g");
  fixture::write_berry_fixture(dir / "b", {1, 4, 9, 2});
  cli::Options g;
  g.config = dir / "site.json";
  g.images = dir / "g";
  cli::Options b = g;
  b.images = dir / "b";
  for (const char* run : {"run1", "run2"}) {
    std::ostringstream diag;
    g.out = dir / run;
    b.out = dir / run;
    REQUIRE(cli::cmd_greenness(g, diag) == 0);
    REQUIRE(cli::cmd_berries(b, diag) == 0);
  }
  for (const char* name : {"greenness_series.csv", "greenness_trend.csv", "berries_series.csv", "berries_trend.csv",
                           "berries_boxes.csv"}) {
    CHECK(read_file(dir / "run1" / name) == read_file(dir / "run2" / name));
  }
}
