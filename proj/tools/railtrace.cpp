// railtrace: reconstruct freight rail routes from geotagged sightings.
//
//   railtrace build|snap|confirm|infer|validate|stats --config run.toml [flags]
//
// Exit codes: 0 success, 2 input or processing error, 3 a previous stage's
// artifact is missing.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "railtrace/pipeline.hpp"

namespace {

constexpr int kExitInputError = 2;
constexpr int kExitMissingStage = 3;

struct Overrides {
  std::string config;
  std::optional<std::size_t> workers;
  std::optional<double> snap_threshold_m;
  std::optional<double> terminal_snap_threshold_m;
  std::optional<double> weld_tolerance_m;
  std::optional<double> alignment_radius_m;
  std::optional<std::size_t> max_rounds;
  std::optional<std::string> out;
};

railtrace::PipelineConfig resolve(const Overrides& o) {
  auto cfg = railtrace::load_config(o.config);
  if (const char* env = std::getenv("RAILTRACE_OUT"); env && *env) cfg.output_dir = env;
  if (o.out) cfg.output_dir = *o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.snap_threshold_m) cfg.snap_threshold_m = *o.snap_threshold_m;
  if (o.terminal_snap_threshold_m) cfg.terminal_snap_threshold_m = *o.terminal_snap_threshold_m;
  if (o.weld_tolerance_m) cfg.weld_tolerance_m = *o.weld_tolerance_m;
  if (o.alignment_radius_m) cfg.alignment_radius_m = *o.alignment_radius_m;
  if (o.max_rounds) cfg.max_rounds = *o.max_rounds;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct link-level freight rail routes from geotagged sightings"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Pipeline config file (key = value)")->required();
    sub->add_option("--workers", o.workers, "Worker threads for parallel stages");
    sub->add_option("--snap-threshold-m", o.snap_threshold_m, "Photo snap threshold in meters");
    sub->add_option("--terminal-snap-threshold-m", o.terminal_snap_threshold_m, "Terminal snap threshold in meters");
    sub->add_option("--weld-tolerance-m", o.weld_tolerance_m, "Endpoint weld tolerance in meters");
    sub->add_option("--alignment-radius-m", o.alignment_radius_m, "Incident alignment radius in meters");
    sub->add_option("--max-rounds", o.max_rounds, "Cap on gap-merge rounds");
    sub->add_option("--out", o.out, "Output directory (overrides RAILTRACE_OUT and the config)");
  };

  auto* build = app.add_subcommand("build", "Build topology and extract the main-line network");
  auto* snap = app.add_subcommand("snap", "Snap observations to main-line links");
  auto* confirm = app.add_subcommand("confirm", "Expand snapped links into confirmed route components");
  auto* infer = app.add_subcommand("infer", "Infer gap routes between confirmed components and terminals");
  auto* validate = app.add_subcommand("validate", "Score inferred routes against incidents and metro areas");
  auto* stats = app.add_subcommand("stats", "Proximity of photo sightings to all lines and main lines");
  for (auto* sub : {build, snap, confirm, infer, validate, stats}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    if (*build) railtrace::cmd_build(cfg, std::cout);
    if (*snap) railtrace::cmd_snap(cfg, std::cout);
    if (*confirm) railtrace::cmd_confirm(cfg, std::cout);
    if (*infer) railtrace::cmd_infer(cfg, std::cout);
    if (*validate) railtrace::cmd_validate(cfg, std::cout);
    if (*stats) railtrace::cmd_stats(cfg, std::cout);
  } catch (const railtrace::Error& e) {
    std::cerr << "railtrace: " << e.what() << "\n";
    return e.code() == railtrace::ErrorCode::MissingStageInput ? kExitMissingStage : kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "railtrace: " << e.what() << "\n";
    return kExitInputError;
  }
  return 0;
}
