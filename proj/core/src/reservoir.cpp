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

#include "perimeter/reservoir.hpp"

#include <random>

#include "perimeter/demand.hpp"
#include "perimeter/errors.hpp"

namespace perimeter {

std::vector<ReservoirSample> simulate_reservoir(const ReservoirConfig& cfg) {
  cfg.smc.validate();
  if (!(cfg.region_length_m > 0.0)) throw ConfigError("region_length_m must be > 0");
  if (!(cfg.dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
  if (cfg.cycles < 1) throw ConfigError("cycles must be >= 1");

  const double length_km = cfg.region_length_m / 1000.0;
  const double dt_h = cfg.dt_s / 3600.0;
  const double v_out = cfg.outflow_veh_per_h / length_km;
  const double v_d = cfg.disturbance_veh_per_h / length_km;
  const double a = cfg.smc.alpha;
  const double b = cfg.smc.beta;
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  SmcState state;
  state.active = true;
  double k = cfg.k0_veh_per_km;
  std::vector<ReservoirSample> out;
  out.reserve(static_cast<std::size_t>(cfg.cycles));
  for (int n = 0; n < cfg.cycles; ++n) {
    double e_out = 0.0;
    double e_d = 0.0;
    switch (cfg.error) {
      case EstimateError::kExact:
        break;
      case EstimateError::kUniform:
        e_out = a * unit(rng);
        e_d = b * unit(rng);
        break;
      case EstimateError::kAdversarial: {
        const double s = sliding_value(k, state.integral_x + (k - cfg.kbar_veh_per_km) * dt_h,
                                       cfg.smc.lambda_per_h, cfg.kbar_veh_per_km);
        const double dir = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
        e_out = dir * a;
        e_d = -dir * b;
        break;
      }
      case EstimateError::kConstant:
        e_out = a;
        e_d = -b;
        break;
    }
    const SmcMeasurement m{k, (v_out + e_out) * length_km, (v_d + e_d) * length_km, cfg.kbar_veh_per_km,
                           cfg.region_length_m, cfg.dt_s};
    const SmcStep step = smc_command(cfg.smc, state, m);
    state = step.state;
    out.push_back({n, n * dt_h, k, state.integral_x, step.sliding, step.q_in_command, step.saturated});
    const double u = step.q_in_command / length_km;
    k += (u - v_out + v_d) * dt_h;
  }
  return out;
}

}  // namespace perimeter
