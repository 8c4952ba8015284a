#include <iostream>

#include <CLI11.hpp>

#include "phenocam/commands.hpp"
#include "phenocam/error.hpp"

int main(int argc, char** argv) {
  using phenocam::cli::Options;
  Options opt;

  CLI::App app{"Camera-trap phenology and visitation analysis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Site configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--jobs", opt.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--strict", opt.strict, "Turn skips into hard errors");
  };

  auto* greenness = app.add_subcommand("greenness", "Depth-gated greenness series and trend");
  common(greenness);
  greenness->add_option("--images", opt.images, "Image directory")->required()->check(CLI::ExistingDirectory);
  greenness->add_option("--depth-dir", opt.depth_dir, "Directory of <image>.depth.png maps (default: --images)");

  auto* berries = app.add_subcommand("berries", "Berry counts and trend");
  common(berries);
  berries->add_option("--images", opt.images, "Image directory")->required()->check(CLI::ExistingDirectory);
  berries->add_option("--depth-dir", opt.depth_dir, "Depth maps, used when foreground gating is enabled");

  auto* visits = app.add_subcommand("visits", "Filter detections and stitch visits");
  common(visits);
  visits->add_option("--detections", opt.detections, "Interchange file (JSON Lines)")->required()->check(CLI::ExistingFile);
  visits->add_option("--classifier", opt.classifier, "Interchange file with taxon_class filled")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Precision/recall/F1 against ground truth");
  common(eval);
  eval->add_option("--detections", opt.detections, "Predictions (interchange)")->required()->check(CLI::ExistingFile);
  eval->add_option("--ground-truth", opt.ground_truth, "Ground truth (interchange)")->required()->check(CLI::ExistingFile);
  eval->add_option("--iou-min", opt.iou_min, "Match when IoU exceeds this value")->capture_default_str();

  auto* plot = app.add_subcommand("plot", "Render series, trends and visits as SVG");
  plot->add_option("--out", opt.out, "SVG file, or directory for plot.svg")->required();
  plot->add_option("--series", opt.series, "Series CSV")->check(CLI::ExistingFile);
  plot->add_option("--trend", opt.trend, "Trend CSV")->check(CLI::ExistingFile);
  plot->add_option("--visits", opt.visits, "Visits CSV")->check(CLI::ExistingFile);
  plot->add_option("--title", opt.title, "Figure title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (greenness->parsed()) return phenocam::cli::cmd_greenness(opt, std::cerr);
    if (berries->parsed()) return phenocam::cli::cmd_berries(opt, std::cerr);
    if (visits->parsed()) return phenocam::cli::cmd_visits(opt, std::cerr);
    if (eval->parsed()) return phenocam::cli::cmd_eval(opt, std::cerr);
    if (plot->parsed()) return phenocam::cli::cmd_plot(opt, std::cerr);
  } catch (const phenocam::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
