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

#include <span>
#include <vector>

#include "perimeter/network.hpp"

namespace perimeter {

struct SignalTiming {
  double cycle_s = 60.0;
  double lost_time_s_per_phase = 4.0;
  double min_green_s = 5.0;

  void validate() const;
};

/// Fixed-cycle plan. Phase 0 serves row-street approaches, phase 1 serves
/// column-street approaches. Each phase is followed by its lost time.
struct SignalPlan {
  NodeId node = -1;
  double cycle_s = 60.0;
  double lost_time_s_per_phase = 4.0;
  std::vector<double> green_s;

  /// Seconds of green for `phase` inside [t, t + dt), dt <= cycle.
  double green_overlap(int phase, double t, double dt) const;
  double green_share(int phase) const { return green_s.at(static_cast<std::size_t>(phase)) / cycle_s; }
  double total_lost_s() const { return lost_time_s_per_phase * static_cast<double>(green_s.size()); }

  /// Greens plus lost times fill the cycle and every green meets `min_green`.
  bool valid(double min_green_s) const;
};

inline int phase_of(Axis axis) { return axis == Axis::kRow ? 0 : 1; }

struct ApproachFlow {
  double flow_veh_per_h = 0.0;
  double saturation_veh_per_h = 1800.0;
};

/// Webster split: effective green proportional to the critical flow ratio
/// y_i = q_i / s_i, then clamped to the minimum green with the remainder
/// redistributed. All-zero flows give an equal split.
SignalPlan webster_splits(NodeId node, std::span<const ApproachFlow> approaches,
                          const SignalTiming& timing);

/// Plan with equal greens for `phases` phases.
SignalPlan equal_plan(NodeId node, int phases, const SignalTiming& timing);

}  // namespace perimeter
