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

/// @file sensing.hpp
/// @brief Loop-detector emulation and network fundamental diagram aggregates.
///
/// Samples taken over cycle n-1 feed the controller at cycle n.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "perimeter/network.hpp"

namespace perimeter {

struct DetectorSample {
  LinkId link = -1;
  int cycle = 0;
  /// Time occupancy in percent, [0, 100].
  double occupancy_pct = 0.0;
  double flow_veh_per_h = 0.0;
};

struct NfdSample {
  int cycle = 0;
  double density_veh_per_km = 0.0;
  double flow_veh_per_h = 0.0;
};

struct SetPoint {
  double kbar_veh_per_km = 0.0;
  double q_max_veh_per_h = 0.0;
  double bin_width_veh_per_km = 2.0;
  /// No bin above the chosen one was observed, so the scatter never showed a
  /// congested branch.
  bool no_congested_branch = false;
};

/// Link density across all lanes: lanes * k_j * occupancy / 100.
double link_density(const DetectorSample& sample, const Link& link);

/// Occupancy that a detector on `link` reports for a (time-averaged) count.
double occupancy_from_state(double mean_vehicle_count, const Link& link);

/// Per-link value keyed by LinkId (entries outside the region are ignored).
struct LinkValue {
  LinkId link = -1;
  double value = 0.0;
};

/// Length-weighted mean over the monitored links. Throws InputError naming
/// the first monitored link without a sample.
double network_density(std::span<const LinkValue> link_densities, const Network& network,
                       const ProtectedRegion& region);
double network_flow(std::span<const LinkValue> link_flows, const Network& network,
                    const ProtectedRegion& region);

/// Bins the scatter by density and returns the centre of the bin with the
/// highest mean flow. Bins with fewer than `min_samples` points are skipped.
SetPoint extract_set_point(std::span<const NfdSample> scatter, double bin_width_veh_per_km = 2.0,
                           int min_samples = 1);

}  // namespace perimeter
