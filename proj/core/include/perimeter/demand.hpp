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

#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "perimeter/network.hpp"

namespace perimeter {

using Rng = std::mt19937_64;

enum class DemandShape { kTriangular, kDome, kSinusoidal, kTable };
enum class DemandMode { kPoisson, kDeterministic };

/// Piecewise-constant demand, one rate per `period_s` step, zero after
/// `duration_s`. Rates are veh/h per origin-destination pair.
struct DemandProfile {
  std::string name = "D1";
  DemandShape shape = DemandShape::kTriangular;
  double period_s = 300.0;
  double duration_s = 4500.0;
  double base_veh_per_h = 10.0;
  double peak_veh_per_h = 40.0;
  /// Wave length of the sinusoidal shape.
  double wave_period_s = 1500.0;
  /// Per-step rates for kTable.
  std::vector<double> table_veh_per_h;

  void validate() const;
  int steps() const;
  double rate_at(double t_s) const;
  double step_rate(int step) const;
};

/// D1 triangular, D2 dome, D3 sinusoidal; base and peak from the caller.
DemandProfile build_demand(const std::string& name, double base_veh_per_h, double peak_veh_per_h);

struct OdPair {
  NodeId origin = -1;
  NodeId destination = -1;
};

/// Cross-town pattern: each non-corner boundary zone sends trips to every
/// non-corner zone on the opposite side of the grid.
std::vector<OdPair> opposite_side_pairs(const Network& network);
/// Opposite-side pairs restricted to zones facing the region: west/east
/// zones on the region's rows, north/south zones on its columns.
std::vector<OdPair> through_region_pairs(const Network& network, const RegionBounds& bounds);

/// Every ordered pair of distinct zones.
std::vector<OdPair> all_zone_pairs(const Network& network);

/// Vehicles to inject per OD pair over [t, t + dt). Deterministic mode keeps
/// fractional remainders in `carry` (one entry per pair).
std::vector<int> load_demand(const DemandProfile& profile, std::span<const OdPair> pairs, double t_s,
                             double dt_s, DemandMode mode, Rng& rng, std::vector<double>& carry);

}  // namespace perimeter
