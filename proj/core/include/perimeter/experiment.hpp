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

/// @file experiment.hpp
/// @brief Scenario runner, aggregate metrics, comparisons and sweeps.
///
/// A scenario drives the plant with 1 s ticks. At every cycle boundary the
/// detectors are read over the cycle that just ended, the controller (if any)
/// computes a region inflow and the entry approaches get their greens for the
/// next cycle. Signals that are not gating run Webster splits refreshed from
/// measured approach demand.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "perimeter/control.hpp"
#include "perimeter/demand.hpp"
#include "perimeter/network.hpp"
#include "perimeter/plant.hpp"
#include "perimeter/sensing.hpp"
#include "perimeter/signals.hpp"

namespace perimeter {

/// Declared fuel surrogate: a * distance + b * delay. Not an emissions model.
struct FuelModel {
  double l_per_km = 0.08;
  double l_per_delay_s = 0.0003;
};

enum class OdPattern { kOppositeSides, kThroughRegion, kAllPairs };

struct ScenarioConfig {
  std::string name = "scenario";
  GridSpec grid;
  RegionBounds region;
  SignalTiming timing;
  PlantOptions plant;
  DemandProfile demand;
  OdPattern od = OdPattern::kOppositeSides;
  DemandMode demand_mode = DemandMode::kPoisson;
  ControllerSpec controller;
  double kbar_veh_per_km = 48.0;
  double horizon_s = 10560.0;
  double reroute_period_s = 300.0;
  double reroute_fraction = 0.2;
  double webster_period_s = 300.0;
  FuelModel fuel;
  std::uint64_t seed = 1;
  bool record_links = false;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// One row per cycle boundary. Measurements cover the cycle that just ended;
/// the command applies to the cycle that starts.
struct CycleRecord {
  int cycle = 0;
  double t_s = 0.0;
  double k_veh_per_km = 0.0;
  double q_veh_per_h = 0.0;
  double q_in_veh_per_h = 0.0;
  double q_out_veh_per_h = 0.0;
  double q_d_veh_per_h = 0.0;
  bool active = false;
  double q_in_command_veh_per_h = 0.0;
  double u_unclamped = 0.0;
  double sliding = 0.0;
  double lyapunov = 0.0;
  bool saturated = false;
  /// Inflow the displayed entry greens can pass at saturation.
  double green_capacity_veh_per_h = 0.0;
  std::vector<double> entry_green_s;
  std::int64_t in_network = 0;
  std::int64_t waiting = 0;
  std::int64_t exited = 0;
};

struct LinkRecord {
  int cycle = 0;
  LinkId link = -1;
  int count = 0;
  int inflow = 0;
  int outflow = 0;
};

struct Metrics {
  std::int64_t vehicles = 0;
  std::int64_t arrived = 0;
  /// Still travelling or waiting at the horizon; timed to the horizon.
  std::int64_t unfinished = 0;
  double mean_travel_time_s = 0.0;
  double mean_delay_s = 0.0;
  double fuel_l_per_veh = 0.0;
  double mean_speed_kmh = 0.0;
  double total_distance_km = 0.0;
  double total_time_h = 0.0;
  bool no_traffic = true;
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<LinkId> entry_links;
  std::vector<CycleRecord> cycles;
  std::vector<LinkRecord> links;
  Metrics metrics;
  std::int64_t conservation_violations = 0;
  double peak_density_veh_per_km = 0.0;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

Metrics compute_metrics(std::span<const Vehicle> vehicles, double horizon_s, const FuelModel& fuel);

/// Percent change 100 * (treated - baseline) / baseline per aggregate.
struct Comparison {
  double travel_time_pct = 0.0;
  double delay_pct = 0.0;
  double fuel_pct = 0.0;
  double speed_pct = 0.0;
  /// A baseline aggregate was zero; the matching entry is NaN.
  bool undefined = false;
};

Comparison compare(const Metrics& baseline, const Metrics& treated);

/// Mean |k - kbar| over the cycles in which an activation tracker fed with
/// this run's density would be active. Applies the same window rule to
/// controlled and uncontrolled runs.
struct RegulationError {
  double mean_abs_veh_per_km = 0.0;
  int cycles = 0;
};

RegulationError regulation_error(std::span<const CycleRecord> cycles, double kbar_veh_per_km,
                                 const ActivationConfig& activation = {});

std::vector<NfdSample> nfd_scatter(std::span<const CycleRecord> cycles);

/// Reads the nfd.csv written by write_run_outputs. Throws InputError on a
/// malformed header or row.
std::vector<NfdSample> parse_nfd_csv(const std::string& text);

/// Sets a named scalar on a scenario. Known names: lambda_per_h, eta, alpha,
/// beta, mu, zeta, kbar_veh_per_km, seed, peak_veh_per_h, base_veh_per_h,
/// reroute_fraction. Throws ConfigError otherwise.
void apply_parameter(ScenarioConfig& cfg, const std::string& name, double value);

using ParameterSet = std::vector<std::pair<std::string, double>>;

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

/// Cartesian product in row-major order (last axis fastest).
std::vector<ParameterSet> cartesian(std::span<const SweepAxis> axes);

struct SweepRow {
  ParameterSet params;
  Metrics baseline;
  Metrics treated;
  Comparison change;
  RegulationError regulation;
  RegulationError baseline_regulation;
  std::int64_t conservation_violations = 0;
};

/// One treated scenario per parameter set, compared with the uncontrolled
/// run of the same scenario. Baselines are shared between points that only
/// differ in controller settings. Rows come back in input order whatever
/// the number of jobs.
std::vector<SweepRow> sweep(const ScenarioConfig& base, std::span<const ParameterSet> points, int jobs = 1);

/// Peak-rate search for a demand that pushes the uncontrolled peak density
/// into [low_ratio, high_ratio] * kbar.
struct CalibrationOptions {
  double low_ratio = 1.2;
  double high_ratio = 1.6;
  double peak_min_veh_per_h = 1.0;
  double peak_max_veh_per_h = 400.0;
  int max_iterations = 20;
};

struct CalibrationResult {
  double peak_veh_per_h = 0.0;
  double peak_density_veh_per_km = 0.0;
  int iterations = 0;
  bool converged = false;
};

CalibrationResult calibrate_demand(const ScenarioConfig& base, double kbar_veh_per_km,
                                   const CalibrationOptions& options = {});

/// Writes text to `path` through a temporary file in the same directory and
/// a rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// nfd.csv, density.csv, controller.csv, flows.csv, summary.json and, when
/// links were recorded, links.csv.
void write_run_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

std::string sweep_table_csv(std::span<const SweepRow> rows);

std::string to_string(OdPattern od);
OdPattern od_pattern_from_string(const std::string& s);

}  // namespace perimeter
