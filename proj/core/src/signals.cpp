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

#include "perimeter/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perimeter/errors.hpp"

namespace perimeter {

void SignalTiming::validate() const {
  if (!(cycle_s > 0.0)) throw ConfigError("signals cycle_s must be > 0");
  if (lost_time_s_per_phase < 0.0) throw ConfigError("signals lost_time_s_per_phase must be >= 0");
  if (min_green_s < 0.0) throw ConfigError("signals min_green_s must be >= 0");
  if (2.0 * (min_green_s + lost_time_s_per_phase) > cycle_s) {
    throw ConfigError("signals cycle_s too short for two phases at min_green_s");
  }
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

double SignalPlan::green_overlap(int phase, double t, double dt) const {
  double start = 0.0;
  for (int p = 0; p < phase; ++p) start += green_s[static_cast<std::size_t>(p)] + lost_time_s_per_phase;
  const double end = start + green_s.at(static_cast<std::size_t>(phase));
  const double pos = std::fmod(t, cycle_s);
  double total = overlap(pos, pos + dt, start, end);
  // Tick that wraps into the next cycle.
  if (pos + dt > cycle_s) total += overlap(pos - cycle_s, pos + dt - cycle_s, start, end);
  return total;
}

bool SignalPlan::valid(double min_green_s) const {
  const double sum = std::accumulate(green_s.begin(), green_s.end(), 0.0) + total_lost_s();
  if (std::abs(sum - cycle_s) > 1e-9 * cycle_s) return false;
  return std::all_of(green_s.begin(), green_s.end(),
                     [&](double g) { return g >= min_green_s - 1e-9; });
}

SignalPlan equal_plan(NodeId node, int phases, const SignalTiming& timing) {
  SignalPlan plan;
  plan.node = node;
  plan.cycle_s = timing.cycle_s;
  plan.lost_time_s_per_phase = timing.lost_time_s_per_phase;
  const double usable = timing.cycle_s - timing.lost_time_s_per_phase * phases;
  plan.green_s.assign(static_cast<std::size_t>(phases), usable / phases);
  return plan;
}

SignalPlan webster_splits(NodeId node, std::span<const ApproachFlow> approaches,
                          const SignalTiming& timing) {
  if (approaches.empty()) throw InputError("webster_splits needs at least one approach");
  const int n = static_cast<int>(approaches.size());
  SignalPlan plan = equal_plan(node, n, timing);
  const double usable = timing.cycle_s - plan.total_lost_s();

  std::vector<double> y(approaches.size());
  for (std::size_t i = 0; i < approaches.size(); ++i) {
    if (!(approaches[i].saturation_veh_per_h > 0.0)) throw InputError("approach saturation flow must be > 0");
    y[i] = std::max(0.0, approaches[i].flow_veh_per_h) / approaches[i].saturation_veh_per_h;
  }
  if (std::accumulate(y.begin(), y.end(), 0.0) <= 0.0) return plan;

  // Proportional split, pinning approaches that fall under min green and
  // re-splitting the rest until nothing else falls under.
  std::vector<bool> pinned(approaches.size(), false);
  for (;;) {
    double free_green = usable;
    double free_y = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (pinned[i]) free_green -= timing.min_green_s;
      else free_y += y[i];
    }
    bool changed = false;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (pinned[i]) {
        plan.green_s[i] = timing.min_green_s;
        continue;
      }
      plan.green_s[i] = free_y > 0.0 ? free_green * y[i] / free_y : timing.min_green_s;
      if (plan.green_s[i] < timing.min_green_s) {
        pinned[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return plan;
}

}  // namespace perimeter
