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

#include "perimeter/demand.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perimeter/errors.hpp"

namespace perimeter {

void DemandProfile::validate() const {
  if (!(period_s > 0.0)) throw ConfigError("demand period_s must be > 0");
  if (duration_s < 0.0) throw ConfigError("demand duration_s must be >= 0");
  if (base_veh_per_h < 0.0) throw ConfigError("demand base_veh_per_h must be >= 0");
  if (peak_veh_per_h < 0.0) throw ConfigError("demand peak_veh_per_h must be >= 0");
  if (shape == DemandShape::kSinusoidal && !(wave_period_s > 0.0)) {
    throw ConfigError("demand wave_period_s must be > 0");
  }
  if (shape == DemandShape::kTable) {
    if (table_veh_per_h.empty()) throw ConfigError("demand table_veh_per_h must not be empty");
    for (double r : table_veh_per_h) {
      if (r < 0.0) throw ConfigError("demand table_veh_per_h entries must be >= 0");
    }
  }
}

int DemandProfile::steps() const {
  if (shape == DemandShape::kTable) return static_cast<int>(table_veh_per_h.size());
  return static_cast<int>(std::lround(duration_s / period_s));
}

double DemandProfile::step_rate(int step) const {
  const int n = steps();
  if (step < 0 || step >= n) return 0.0;
  const double span = peak_veh_per_h - base_veh_per_h;
  const double mid = (n - 1) / 2.0;
  switch (shape) {
    case DemandShape::kTriangular: {
      if (mid <= 0.0) return peak_veh_per_h;
      return base_veh_per_h + span * (1.0 - std::abs(step - mid) / mid);
    }
    case DemandShape::kDome: {
      const double z = (step - mid) / (mid + 1.0);
      return base_veh_per_h + span * std::sqrt(std::max(0.0, 1.0 - z * z));
    }
    case DemandShape::kSinusoidal: {
      const double phase = 2.0 * std::numbers::pi * (step * period_s) / wave_period_s;
      return base_veh_per_h + span * 0.5 * (1.0 - std::cos(phase));
    }
    case DemandShape::kTable:
      return table_veh_per_h[static_cast<std::size_t>(step)];
  }
  return 0.0;
}

double DemandProfile::rate_at(double t_s) const {
  if (t_s < 0.0) return 0.0;
  return step_rate(static_cast<int>(std::floor(t_s / period_s)));
}

DemandProfile build_demand(const std::string& name, double base_veh_per_h, double peak_veh_per_h) {
  DemandProfile p;
  p.name = name;
  p.base_veh_per_h = base_veh_per_h;
  p.peak_veh_per_h = peak_veh_per_h;
  p.period_s = 300.0;
  p.duration_s = 4500.0;
  if (name == "D1") {
    p.shape = DemandShape::kTriangular;
  } else if (name == "D2") {
    p.shape = DemandShape::kDome;
  } else if (name == "D3") {
    p.shape = DemandShape::kSinusoidal;
    p.wave_period_s = 1500.0;
  } else {
    throw ConfigError("unknown demand profile '" + name + "'");
  }
  p.validate();
  return p;
}

namespace {

enum class Side { kNorth, kSouth, kWest, kEast, kCorner };

Side side_of(const Network& net, const Node& n) {
  const int s = net.segments_per_block();
  const int r = n.fine_row / s;
  const int c = n.fine_col / s;
  const bool top = r == 0;
  const bool bottom = r == net.rows() - 1;
  const bool left = c == 0;
  const bool right = c == net.cols() - 1;
  if ((top || bottom) && (left || right)) return Side::kCorner;
  if (top) return Side::kNorth;
  if (bottom) return Side::kSouth;
  if (left) return Side::kWest;
  return Side::kEast;
}

Side opposite(Side s) {
  switch (s) {
    case Side::kNorth: return Side::kSouth;
    case Side::kSouth: return Side::kNorth;
    case Side::kWest: return Side::kEast;
    case Side::kEast: return Side::kWest;
    default: return Side::kCorner;
  }
}

}  // namespace

std::vector<OdPair> opposite_side_pairs(const Network& network) {
  std::vector<OdPair> pairs;
  for (NodeId o : network.zones()) {
    const Side so = side_of(network, network.node(o));
    if (so == Side::kCorner) continue;
    for (NodeId d : network.zones()) {
      if (side_of(network, network.node(d)) == opposite(so)) pairs.push_back({o, d});
    }
  }
  return pairs;
}

std::vector<OdPair> through_region_pairs(const Network& network, const RegionBounds& bounds) {
  const int s = network.segments_per_block();
  auto aligned = [&](const Node& n, Side side) {
    const int r = n.fine_row / s;
    const int c = n.fine_col / s;
    if (side == Side::kWest || side == Side::kEast) return r >= bounds.row_min && r <= bounds.row_max;
    return c >= bounds.col_min && c <= bounds.col_max;
  };
  std::vector<OdPair> pairs;
  for (NodeId o : network.zones()) {
    const Node& on = network.node(o);
    const Side so = side_of(network, on);
    if (so == Side::kCorner || !aligned(on, so)) continue;
    for (NodeId d : network.zones()) {
      const Node& dn = network.node(d);
      if (side_of(network, dn) == opposite(so) && aligned(dn, opposite(so))) pairs.push_back({o, d});
    }
  }
  return pairs;
}

std::vector<OdPair> all_zone_pairs(const Network& network) {
  std::vector<OdPair> pairs;
  for (NodeId o : network.zones()) {
    for (NodeId d : network.zones()) {
      if (o != d) pairs.push_back({o, d});
    }
  }
  return pairs;
}

std::vector<int> load_demand(const DemandProfile& profile, std::span<const OdPair> pairs, double t_s,
                             double dt_s, DemandMode mode, Rng& rng, std::vector<double>& carry) {
  std::vector<int> counts(pairs.size(), 0);
  if (carry.size() != pairs.size()) carry.assign(pairs.size(), 0.0);
  const double rate = profile.rate_at(t_s);
  if (rate <= 0.0) return counts;
  const double expected = rate * dt_s / 3600.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (mode == DemandMode::kDeterministic) {
      carry[i] += expected;
      const double whole = std::floor(carry[i] + 1e-9);
      counts[i] = static_cast<int>(whole);
      carry[i] -= whole;
    } else {
      std::poisson_distribution<int> dist(expected);
      counts[i] = dist(rng);
    }
  }
  return counts;
}

}  // namespace perimeter
