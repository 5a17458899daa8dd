// Copyright 2026 The Perimeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// perimctl: run scenarios, sweeps, set-point extraction and demand
// calibration from JSON configs.
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime error. Errors go to
// stderr as one JSON line: {"error":"config","message":"..."}.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "perimeter/config.hpp"
#include "perimeter/errors.hpp"
#include "perimeter/experiment.hpp"
#include "perimeter/sensing.hpp"

namespace fs = std::filesystem;
using namespace perimeter;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

/// Config-stage failures (bad file, bad keys) map to exit 2.
template <typename F>
auto load(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void print_metrics(const std::string& label, const Metrics& m) {
  fmt::print("{}: vehicles={} arrived={} tt_s={:.2f} delay_s={:.2f} fuel_l={:.4f} speed_kmh={:.2f}\n", label,
             m.vehicles, m.arrived, m.mean_travel_time_s, m.mean_delay_s, m.fuel_l_per_veh, m.mean_speed_kmh);
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string setpoint;
  bool dry_run = false;
};

int cmd_run(const RunArgs& a) {
  RunConfig rc = load([&] { return parse_run_config(read_text_file(a.config)); });
  std::string sp_file = a.setpoint.empty() ? rc.setpoint_file.value_or("") : a.setpoint;
  if (!sp_file.empty()) {
    const SetPoint sp = load([&] { return parse_setpoint(read_text_file(sp_file)); });
    rc.scenario.kbar_veh_per_km = sp.kbar_veh_per_km;
    rc.scenario.controller.pic.kbar = sp.kbar_veh_per_km;
  }
  std::vector<std::uint64_t> seeds = rc.seeds;
  if (a.seed) seeds = {*a.seed};
  if (seeds.empty()) seeds = {rc.scenario.seed};
  if (a.dry_run) {
    fmt::print("config ok: {} seed(s), horizon {} s\n", seeds.size(), rc.scenario.horizon_s);
    return 0;
  }
  for (std::uint64_t seed : seeds) {
    ScenarioConfig cfg = rc.scenario;
    cfg.seed = seed;
    const fs::path dir = seeds.size() == 1 ? fs::path(a.out) : fs::path(a.out) / fmt::format("seed_{}", seed);
    const ScenarioResult r = run_scenario(cfg);
    write_run_outputs(r, dir);
    print_metrics(fmt::format("seed {}", seed), r.metrics);
    fmt::print("peak density {:.2f} veh/km, outputs in {}\n", r.peak_density_veh_per_km, dir.string());
    if (r.conservation_violations != 0) {
      return fail("runtime", fmt::format("{} conservation violations", r.conservation_violations), kExitRuntime);
    }
  }
  return 0;
}

int cmd_network(const std::string& config, const std::string& out) {
  const RunConfig rc = load([&] { return parse_run_config(read_text_file(config)); });
  const Network net = load([&] { return build_grid(rc.scenario.grid); });
  const ProtectedRegion region = load([&] { return define_protected_region(net, rc.scenario.region); });
  const std::string doc = to_document(net, region) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    write_file_atomic(out, doc);
  }
  fmt::print(stderr, "links={} signals={} zones={} monitored={} entries={} exits={} L_m={}\n", net.link_count(),
             net.signalized_count(), net.zones().size(), region.monitored.size(), region.entry_links.size(),
             region.exit_links.size(), region.total_length_m);
  return 0;
}

int cmd_setpoint(const std::string& input, double bin_width, int min_samples, const std::string& out) {
  fs::path path(input);
  if (fs::is_directory(path)) path /= "nfd.csv";
  const auto scatter = load([&] { return parse_nfd_csv(read_text_file(path.string())); });
  const SetPoint sp = load([&] { return extract_set_point(scatter, bin_width, min_samples); });
  fmt::print("kbar_veh_per_km={} q_max_veh_per_h={:.2f} bin_width_veh_per_km={}{}\n", sp.kbar_veh_per_km,
             sp.q_max_veh_per_h, sp.bin_width_veh_per_km, sp.no_congested_branch ? " warning=no_congested_branch" : "");
  write_file_atomic(fs::path(out) / "setpoint.json", dump_setpoint(sp) + "\n");
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, std::optional<int> jobs, bool dry_run) {
  SweepConfig sc = load([&] { return parse_sweep_config(read_text_file(config)); });
  if (jobs) sc.jobs = *jobs;
  if (dry_run) {
    fmt::print("config ok: {} point(s)\n", sc.points.size());
    return 0;
  }
  const auto rows = sweep(sc.base, sc.points, sc.jobs);
  write_file_atomic(fs::path(out) / "table.csv", sweep_table_csv(rows));
  for (const auto& r : rows) {
    std::string label;
    for (const auto& [name, value] : r.params) label += fmt::format("{}={} ", name, value);
    fmt::print("{}tt={:+.2f}% delay={:+.2f}% fuel={:+.2f}% speed={:+.2f}%\n", label, r.change.travel_time_pct,
               r.change.delay_pct, r.change.fuel_pct, r.change.speed_pct);
  }
  return 0;
}

int cmd_calibrate(const std::string& config, double kbar, std::optional<std::uint64_t> seed,
                  const CalibrationOptions& opt, const std::string& out, bool dry_run) {
  RunConfig rc = load([&] { return parse_run_config(read_text_file(config)); });
  if (seed) rc.scenario.seed = *seed;
  if (!(kbar > 0.0)) kbar = rc.scenario.kbar_veh_per_km;
  if (dry_run) {
    fmt::print("config ok: target peak density [{:.2f}, {:.2f}] veh/km\n", opt.low_ratio * kbar, opt.high_ratio * kbar);
    return 0;
  }
  const CalibrationResult r = calibrate_demand(rc.scenario, kbar, opt);
  fmt::print("peak_veh_per_h={} peak_density_veh_per_km={:.2f} iterations={} converged={}\n", r.peak_veh_per_h,
             r.peak_density_veh_per_km, r.iterations, r.converged);
  const nlohmann::json j = {{"peak_veh_per_h", r.peak_veh_per_h},
                            {"peak_density_veh_per_km", r.peak_density_veh_per_km},
                            {"kbar_veh_per_km", kbar},
                            {"iterations", r.iterations},
                            {"converged", r.converged}};
  write_file_atomic(fs::path(out) / "calibration.json", j.dump(2) + "\n");
  return r.converged ? 0 : fail("runtime", "calibration did not reach the target band", kExitRuntime);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perimeter gating simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one scenario per seed and write its artifacts");
  run->add_option("config", run_args.config, "Run config (JSON)")->required();
  run->add_option("--seed", run_args.seed, "Override the seed list with one seed");
  run->add_option("--out", run_args.out, "Output directory");
  run->add_option("--setpoint", run_args.setpoint, "setpoint.json overriding kbar");
  run->add_flag("--dry-run", run_args.dry_run, "Validate the config only");

  std::string sp_input;
  std::string sp_out = ".";
  double sp_bin = 2.0;
  int sp_min = 1;
  auto* setpoint = app.add_subcommand("setpoint", "Extract kbar from an uncontrolled run's nfd.csv");
  setpoint->add_option("input", sp_input, "nfd.csv or a run output directory")->required();
  setpoint->add_option("--bin-width", sp_bin, "Density bin width, veh/km");
  setpoint->add_option("--min-samples", sp_min, "Minimum samples per bin");
  setpoint->add_option("--out", sp_out, "Directory for setpoint.json");

  std::string sw_config;
  std::string sw_out = "out";
  std::optional<int> sw_jobs;
  bool sw_dry = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep and write table.csv");
  sweep_cmd->add_option("config", sw_config, "Sweep config (JSON)")->required();
  sweep_cmd->add_option("--out", sw_out, "Output directory");
  sweep_cmd->add_option("--jobs", sw_jobs, "Concurrent scenarios");
  sweep_cmd->add_flag("--dry-run", sw_dry, "Validate the config only");

  std::string cal_config;
  std::string cal_out = ".";
  double cal_kbar = 0.0;
  std::optional<std::uint64_t> cal_seed;
  bool cal_dry = false;
  CalibrationOptions cal_opt;
  auto* cal = app.add_subcommand("calibrate-demand", "Search the demand peak for a target uncontrolled peak density");
  cal->add_option("config", cal_config, "Run config (JSON); the controller is ignored")->required();
  cal->add_option("--kbar", cal_kbar, "Set point, veh/km (default: the config's)");
  cal->add_option("--low", cal_opt.low_ratio, "Lower peak-density ratio");
  cal->add_option("--high", cal_opt.high_ratio, "Upper peak-density ratio");
  cal->add_option("--peak-min", cal_opt.peak_min_veh_per_h, "Search lower bound, veh/h per OD pair");
  cal->add_option("--peak-max", cal_opt.peak_max_veh_per_h, "Search upper bound, veh/h per OD pair");
  cal->add_option("--seed", cal_seed, "Seed");
  cal->add_option("--out", cal_out, "Directory for calibration.json");
  cal->add_flag("--dry-run", cal_dry, "Validate the config only");

  std::string net_config;
  std::string net_out;
  auto* network = app.add_subcommand("network", "Print the network and protected region as JSON");
  network->add_option("config", net_config, "Run config (JSON)")->required();
  network->add_option("--out", net_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitConfig);
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*network) return cmd_network(net_config, net_out);
    if (*setpoint) return cmd_setpoint(sp_input, sp_bin, sp_min, sp_out);
    if (*sweep_cmd) return cmd_sweep(sw_config, sw_out, sw_jobs, sw_dry);
    if (*cal) return cmd_calibrate(cal_config, cal_kbar, cal_seed, cal_opt, cal_out, cal_dry);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kExitConfig);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kExitRuntime);
  }
  return 0;
}
