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

#include "perimeter/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "perimeter/errors.hpp"

namespace perimeter {

double link_density(const DetectorSample& sample, const Link& link) {
  if (!(sample.occupancy_pct >= 0.0 && sample.occupancy_pct <= 100.0)) {
    throw InputError("occupancy out of [0, 100] on link " + std::to_string(sample.link));
  }
  return link.params.lanes * link.params.jam_density_veh_per_km_lane * sample.occupancy_pct / 100.0;
}

double occupancy_from_state(double mean_vehicle_count, const Link& link) {
  const double o = 100.0 * mean_vehicle_count / link.storage_veh();
  return std::clamp(o, 0.0, 100.0);
}

namespace {

double weighted_mean(std::span<const LinkValue> values, const Network& network,
                     const ProtectedRegion& region) {
  if (region.monitored.empty() || !(region.total_length_m > 0.0)) {
    throw InputError("protected region is empty");
  }
  std::vector<std::optional<double>> by_link(network.link_count());
  for (const auto& v : values) {
    if (v.link >= 0 && static_cast<std::size_t>(v.link) < by_link.size()) {
      by_link[static_cast<std::size_t>(v.link)] = v.value;
    }
  }
  double sum = 0.0;
  for (LinkId z : region.monitored) {
    const auto& v = by_link[static_cast<std::size_t>(z)];
    if (!v) throw InputError("missing sample for monitored link " + std::to_string(z));
    sum += *v * network.link(z).params.length_m;
  }
  return sum / region.total_length_m;
}

}  // namespace

double network_density(std::span<const LinkValue> link_densities, const Network& network,
                       const ProtectedRegion& region) {
  return weighted_mean(link_densities, network, region);
}

double network_flow(std::span<const LinkValue> link_flows, const Network& network,
                    const ProtectedRegion& region) {
  return weighted_mean(link_flows, network, region);
}

SetPoint extract_set_point(std::span<const NfdSample> scatter, double bin_width, int min_samples) {
  if (scatter.empty()) throw InputError("set point extraction needs a non-empty scatter");
  if (!(bin_width > 0.0)) throw InputError("bin width must be > 0");

  struct Bin {
    double sum = 0.0;
    int count = 0;
  };
  std::map<long, Bin> bins;
  for (const auto& s : scatter) {
    auto& b = bins[static_cast<long>(std::floor(s.density_veh_per_km / bin_width))];
    b.sum += s.flow_veh_per_h;
    ++b.count;
  }
  std::optional<long> best;
  double best_flow = 0.0;
  for (const auto& [idx, b] : bins) {
    if (b.count < min_samples) continue;
    const double mean = b.sum / b.count;
    if (!best || mean > best_flow) {
      best = idx;
      best_flow = mean;
    }
  }
  if (!best) throw InputError("no density bin has enough samples");

  SetPoint sp;
  sp.bin_width_veh_per_km = bin_width;
  sp.kbar_veh_per_km = (static_cast<double>(*best) + 0.5) * bin_width;
  sp.q_max_veh_per_h = best_flow;
  sp.no_congested_branch = bins.rbegin()->first == *best;
  return sp;
}

}  // namespace perimeter
