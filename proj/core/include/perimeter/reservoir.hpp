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

/// @file reservoir.hpp
/// @brief Single-reservoir synthetic plant for exercising the sliding-mode
/// law in isolation: dk/dt = u - V_out + V_d.
///
/// The controller sees outflow and disturbance estimates whose errors are
/// bounded by the configured alpha and beta (veh/km/h).

#pragma once

#include <cstdint>
#include <vector>

#include "perimeter/control.hpp"

namespace perimeter {

enum class EstimateError {
  kExact,
  /// Uniform in [-alpha, alpha] and [-beta, beta].
  kUniform,
  /// Errors at the bound with the sign that opposes the correction.
  kAdversarial,
  /// +alpha on the outflow and -beta on the disturbance every cycle.
  kConstant,
};

struct ReservoirConfig {
  SmcConfig smc;
  double kbar_veh_per_km = 48.0;
  double region_length_m = 7200.0;
  double dt_s = 60.0;
  double k0_veh_per_km = 0.85 * 48.0;
  double outflow_veh_per_h = 21600.0;
  double disturbance_veh_per_h = 0.0;
  EstimateError error = EstimateError::kExact;
  int cycles = 200;
  std::uint64_t seed = 1;
};

struct ReservoirSample {
  int cycle = 0;
  double t_h = 0.0;
  /// Density the controller measured at this cycle.
  double k_veh_per_km = 0.0;
  /// Running sum after this cycle's update.
  double integral_x = 0.0;
  double sliding = 0.0;
  double q_in_command = 0.0;
  bool saturated = false;
};

/// Runs an active controller from k0 with a zero integral for cfg.cycles
/// cycles. Throws ConfigError on invalid settings.
std::vector<ReservoirSample> simulate_reservoir(const ReservoirConfig& cfg);

}  // namespace perimeter
