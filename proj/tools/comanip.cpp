// Command-line front end: run a scenario, compare controller variants, or run
// the invariant self-checks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "checks.hpp"
#include "comanip/export.hpp"
#include "comanip/metrics.hpp"
#include "comanip/scenario.hpp"
#include "comanip/simulation.hpp"

namespace fs = std::filesystem;
using namespace comanip;

namespace {

struct RunOptions {
  std::string scenario;
  std::string out;
  std::string controller;
  std::string allocator;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
  bool plots = false;
};

std::string variant_name(const ScenarioConfig& cfg) {
  return std::string(to_string(cfg.controller)) + "_" + to_string(cfg.allocator);
}

Metrics run_and_export(const ScenarioConfig& cfg, const fs::path& dir, bool plots) {
  fs::create_directories(dir);
  const RunLog log = run_scenario(cfg);
  const Metrics m = compute_metrics(log);
  ExportPaths paths;
  paths.csv = dir / "run.csv";
  paths.summary = dir / "summary.json";
  if (plots) {
    paths.trajectory_svg = dir / "trajectory.svg";
    paths.error_svg = dir / "error.svg";
  }
  export_run(log, m, paths);
  if (log.aborted) std::fprintf(stderr, "warning: run aborted: %s\n", log.abort_reason.c_str());
  return m;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::printf("%-20s final %.4f m  steady %.4f m  rms %.4f m  yaw rms %.4f rad  contact losses %d  sat %.3f\n",
              label.c_str(), m.final_position_error, m.steady_position_error, m.rms_position_error, m.rms_yaw_error,
              m.contact_losses, m.saturation_duty);
}

int cmd_run(const RunOptions& o) {
  ScenarioConfig cfg = load_scenario(o.scenario);
  if (!o.controller.empty()) cfg.controller = parse_controller(o.controller);
  if (!o.allocator.empty()) cfg.allocator = parse_allocator(o.allocator);
  if (o.duration) cfg.duration = *o.duration;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  const Metrics m = run_and_export(cfg, o.out, o.plots);
  print_metrics(cfg.name + " " + variant_name(cfg), m);
  std::printf("wrote %s\n", (fs::path(o.out) / "run.csv").string().c_str());
  return m.aborted ? 2 : 0;
}

int cmd_compare(const RunOptions& o) {
  const ScenarioConfig base = load_scenario(o.scenario);
  nlohmann::json table = nlohmann::json::object();
  int rc = 0;
  for (ControllerKind c : {ControllerKind::adaptive, ControllerKind::pd}) {
    for (AllocatorKind a : {AllocatorKind::qp, AllocatorKind::heuristic}) {
      ScenarioConfig cfg = base;
      cfg.controller = c;
      cfg.allocator = a;
      if (o.duration) cfg.duration = *o.duration;
      if (o.seed) cfg.seed = *o.seed;
      cfg.validate();
      const std::string name = variant_name(cfg);
      const Metrics m = run_and_export(cfg, fs::path(o.out) / name, o.plots);
      print_metrics(name, m);
      table[name] = metrics_to_json(m);
      if (m.aborted) rc = 2;
    }
  }
  nlohmann::json out = {{"scenario", base.name}, {"variants", table}, {"build_id", build_id()}};
  std::ofstream f(fs::path(o.out) / "compare.json");
  if (!f) throw std::runtime_error("cannot write " + (fs::path(o.out) / "compare.json").string());
  f << out.dump(2) << '\n';
  return rc;
}

int cmd_selftest() {
  bool ok = true;
  for (const checks::CheckResult& r : checks::run_invariant_suites()) {
    std::printf("%s  %-28s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar collaborative manipulation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(build_id()));

  RunOptions run;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario and export CSV, summary and plots");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_option("--controller", run.controller, "adaptive|pd")->check(CLI::IsMember({"adaptive", "pd"}));
  run_cmd->add_option("--allocator", run.allocator, "qp|heuristic")->check(CLI::IsMember({"qp", "heuristic"}));
  run_cmd->add_option("--duration", run.duration, "Override duration [s]")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed, "Override seed");
  run_cmd->add_flag("--plots", run.plots, "Also write SVG plots");

  RunOptions cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Run every controller/allocator pairing side by side");
  cmp_cmd->add_option("--scenario", cmp.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", cmp.out, "Output directory")->required();
  cmp_cmd->add_option("--duration", cmp.duration, "Override duration [s]")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--seed", cmp.seed, "Override seed");
  cmp_cmd->add_flag("--plots", cmp.plots, "Also write SVG plots");

  CLI::App* self_cmd = app.add_subcommand("selftest", "Run the analytic, QP, allocation and MPC invariant suites");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run);
    if (*cmp_cmd) return cmd_compare(cmp);
    if (*self_cmd) return cmd_selftest();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
