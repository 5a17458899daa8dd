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

/// @file config.hpp
/// @brief JSON run and sweep configuration.
///
/// Every key carries its unit in its name. Missing keys keep their defaults;
/// unknown keys are rejected with ConfigError naming the full key path.
///
/// Scenario document:
///
///   name, seed, horizon_s, record_links
///   network   { rows, cols, segments_per_block, link { length_m, lanes,
///               jam_density_veh_per_km_lane, free_flow_speed_kmh,
///               speed_at_capacity_kmh, saturation_flow_veh_per_h_lane } }
///   region    { row_min, row_max, col_min, col_max }
///   signals   { cycle_s, lost_time_s_per_phase, min_green_s, webster_period_s }
///   plant     { source_flow_veh_per_h, supply_limit, reroute_period_s,
///               reroute_fraction }
///   demand    { name, shape, mode, od_pattern, period_s, duration_s,
///               base_veh_per_h, peak_veh_per_h, wave_period_s, table_veh_per_h }
///   controller { kind, kbar_veh_per_km, activation_ratio, hold_down_cycles,
///               u_min_veh_per_h, u_max_veh_per_h,
///               smc { lambda_per_h, eta_veh_per_km_h, alpha_veh_per_km_h,
///                     beta_veh_per_km_h, switching, boundary_width_veh_per_km },
///               pic { mu, zeta_veh_per_km_per_veh_per_h } }
///   fuel      { l_per_km, l_per_delay_s }
///
/// A run document is a scenario document plus optional "seeds" (list) and
/// "setpoint_file". A sweep document is { "base": scenario, "jobs": n,
/// "grid": { parameter: [values] } } or the same with "points": [{...}].

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perimeter/experiment.hpp"
#include "perimeter/sensing.hpp"

namespace perimeter {

ScenarioConfig parse_scenario(const std::string& json_text);
std::string dump_scenario(const ScenarioConfig& cfg);

struct RunConfig {
  ScenarioConfig scenario;
  /// Overrides scenario.seed when non-empty; one run per seed.
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> setpoint_file;
};

RunConfig parse_run_config(const std::string& json_text);
std::string dump_run_config(const RunConfig& cfg);

struct SweepConfig {
  ScenarioConfig base;
  std::vector<ParameterSet> points;
  int jobs = 1;
};

SweepConfig parse_sweep_config(const std::string& json_text);

SetPoint parse_setpoint(const std::string& json_text);
std::string dump_setpoint(const SetPoint& sp);

std::string read_text_file(const std::string& path);

}  // namespace perimeter
