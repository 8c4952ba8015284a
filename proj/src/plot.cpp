#include "phenocam/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "phenocam/error.hpp"
#include "phenocam/io.hpp"
#include "phenocam/series.hpp"

namespace phenocam::plot {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kPlotBottom = 360.0;
constexpr double kStripTop = 385.0;
constexpr double kStripBottom = 440.0;

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

io::CsvTable read_checked(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  io::CsvTable table = io::read_csv(path);
  if (table.header.empty() && table.rows.empty()) throw Error(path.string() + ": missing header");
  for (const auto& col : table.header) {
    if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
      throw Error(path.string() + ": unknown column '" + col + "'");
    }
  }
  for (const auto& col : expected) {
    if (std::find(table.header.begin(), table.header.end(), col) == table.header.end()) {
      throw Error(path.string() + ": missing column '" + col + "'");
    }
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != table.header.size()) {
      throw Error(path.string() + ":" + std::to_string(i + 2) + ": expected " + std::to_string(table.header.size()) +
                  " fields");
    }
  }
  return table;
}

struct Columns {
  std::map<std::string, std::size_t> index;
  explicit Columns(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
  }
  const std::string& get(const std::vector<std::string>& row, const std::string& name) const {
    return row[index.at(name)];
  }
};

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("invalid number '" + s + "' in column " + what);
  }
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  void include(double v) {
    if (!std::isfinite(v)) return;
    if (empty) {
      lo = hi = v;
      empty = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void finish() {
    if (empty) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
  bool empty = true;
};

}  // namespace

std::vector<SeriesRow> read_series(const std::filesystem::path& path) {
  const auto table = read_checked(path, {"timestamp", "value", "camera_id", "metric", "inlier"});
  const Columns c(table.header);
  std::vector<SeriesRow> out;
  for (const auto& row : table.rows) {
    SeriesRow r;
    r.timestamp = require_timestamp(c.get(row, "timestamp"));
    r.value = to_double(c.get(row, "value"), "value");
    r.camera_id = c.get(row, "camera_id");
    r.metric = c.get(row, "metric");
    r.inlier = c.get(row, "inlier") != "0";
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrendRow> read_trend(const std::filesystem::path& path) {
  const auto table = read_checked(path, {"camera_id", "metric", "degree", "t0", "t_min", "t_max", "r_squared",
                                         "inlier_count", "outlier_count", "coefficients"});
  const Columns c(table.header);
  std::vector<TrendRow> out;
  for (const auto& row : table.rows) {
    TrendRow r;
    r.camera_id = c.get(row, "camera_id");
    r.metric = c.get(row, "metric");
    r.degree = static_cast<int>(to_double(c.get(row, "degree"), "degree"));
    r.t0 = require_timestamp(c.get(row, "t0"));
    r.t_min = to_double(c.get(row, "t_min"), "t_min");
    r.t_max = to_double(c.get(row, "t_max"), "t_max");
    r.r_squared = to_double(c.get(row, "r_squared"), "r_squared");
    std::stringstream ss(c.get(row, "coefficients"));
    std::string item;
    while (std::getline(ss, item, ';')) r.coefficients.push_back(to_double(item, "coefficients"));
    if (r.coefficients.size() != static_cast<std::size_t>(r.degree) + 1) {
      throw Error(path.string() + ": coefficient count does not match degree");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<VisitRow> read_visits(const std::filesystem::path& path) {
  const auto table = read_checked(path, {"camera_id", "species", "start", "end", "n_frames"});
  const Columns c(table.header);
  std::vector<VisitRow> out;
  for (const auto& row : table.rows) {
    VisitRow r;
    r.camera_id = c.get(row, "camera_id");
    r.species = c.get(row, "species");
    r.start = require_timestamp(c.get(row, "start"));
    r.end = require_timestamp(c.get(row, "end"));
    r.n_frames = static_cast<std::size_t>(to_double(c.get(row, "n_frames"), "n_frames"));
    out.push_back(std::move(r));
  }
  return out;
}

std::string render_svg(const std::vector<SeriesRow>& series, const std::vector<TrendRow>& trends,
                       const std::vector<VisitRow>& visits, const std::string& title) {
  auto seconds = [](Timestamp t) { return static_cast<double>(t.time_since_epoch().count()); };

  // Trend samples in absolute seconds, computed once for both scaling and drawing.
  std::vector<std::vector<std::pair<double, double>>> trend_samples;
  for (const auto& tr : trends) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < kTrendSamples; ++i) {
      const double t = tr.t_min + (tr.t_max - tr.t_min) * i / (kTrendSamples - 1);
      pts.emplace_back(seconds(tr.t0) + t * 86400.0, polyval(tr.coefficients, t));
    }
    trend_samples.push_back(std::move(pts));
  }

  Axis x;
  Axis y;
  for (const auto& s : series) {
    x.include(seconds(s.timestamp));
    y.include(s.value);
  }
  for (const auto& pts : trend_samples) {
    for (const auto& [px, py] : pts) {
      x.include(px);
      y.include(py);
    }
  }
  for (const auto& v : visits) {
    x.include(seconds(v.start));
    x.include(seconds(v.end));
  }
  x.finish();
  y.finish();

  auto sx = [&](double v) { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); };
  auto sy = [&](double v) { return kPlotBottom - (v - y.lo) / (y.hi - y.lo) * (kPlotBottom - kTop); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << fixed(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
       << escape_xml(title) << "</text>\n";
  }

  // Axes with five ticks each.
  os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  os << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kPlotBottom) << "\" x2=\"" << fixed(kWidth - kRight)
     << "\" y2=\"" << fixed(kPlotBottom) << "\"/>\n";
  os << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft) << "\" y2=\""
     << fixed(kPlotBottom) << "\"/>\n";
  os << "</g>\n<g class=\"ticks\" font-size=\"10\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
    const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
    const Timestamp day{std::chrono::seconds(std::llround(xv))};
    os << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << fixed(kPlotBottom + 14) << "\" text-anchor=\"middle\">"
       << (x.empty ? std::string() : format_date(day)) << "</text>\n";
    char label[32];
    std::snprintf(label, sizeof label, "%.3g", yv);
    os << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(sy(yv) + 3) << "\" text-anchor=\"end\">"
       << (y.empty ? std::string() : std::string(label)) << "</text>\n";
  }
  os << "</g>\n";

  std::map<std::pair<std::string, std::string>, std::vector<const SeriesRow*>> groups;
  for (const auto& s : series) groups[{s.camera_id, s.metric}].push_back(&s);
  std::size_t colour = 0;
  for (auto& [key, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SeriesRow* a, const SeriesRow* b) { return a->timestamp < b->timestamp; });
    const char* stroke = kPalette[colour++ % std::size(kPalette)];
    os << "<g class=\"series\" data-camera=\"" << escape_xml(key.first) << "\" data-metric=\""
       << escape_xml(key.second) << "\">\n<polyline fill=\"none\" stroke=\"" << stroke
       << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      os << (i ? " " : "") << fixed(sx(seconds(rows[i]->timestamp))) << ',' << fixed(sy(rows[i]->value));
    }
    os << "\"/>\n";
    for (const SeriesRow* r : rows) {
      os << "<circle class=\"" << (r->inlier ? "inlier" : "outlier") << "\" cx=\"" << fixed(sx(seconds(r->timestamp)))
         << "\" cy=\"" << fixed(sy(r->value)) << "\" r=\"2.5\" fill=\"" << (r->inlier ? stroke : "none")
         << "\" stroke=\"" << stroke << "\"/>\n";
    }
    os << "</g>\n";
  }

  for (std::size_t k = 0; k < trends.size(); ++k) {
    const auto& tr = trends[k];
    os << "<g class=\"trend\" data-camera=\"" << escape_xml(tr.camera_id) << "\" data-metric=\""
       << escape_xml(tr.metric) << "\" data-r2=\"" << io::format_number(tr.r_squared)
       << "\">\n<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    const auto& pts = trend_samples[k];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << fixed(sx(pts[i].first)) << ',' << fixed(sy(pts[i].second));
    }
    os << "\"/>\n</g>\n";
  }

  if (!visits.empty()) {
    std::map<std::string, std::size_t> species_colour;
    for (const auto& v : visits) species_colour.emplace(v.species, 0);
    std::size_t i = 0;
    for (auto& [_, c] : species_colour) c = i++;
    os << "<g class=\"visits\">\n";
    for (const auto& v : visits) {
      const double x0 = sx(seconds(v.start));
      const double x1 = std::max(sx(seconds(v.end)), x0 + 1.0);
      os << "<rect class=\"visit\" x=\"" << fixed(x0) << "\" y=\"" << fixed(kStripTop) << "\" width=\""
         << fixed(x1 - x0) << "\" height=\"" << fixed(kStripBottom - kStripTop) << "\" fill=\""
         << kPalette[species_colour[v.species] % std::size(kPalette)] << "\" data-species=\""
         << escape_xml(v.species) << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace phenocam::plot
