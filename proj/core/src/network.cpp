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

#include "perimeter/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <utility>

#include <nlohmann/json.hpp>

#include "perimeter/errors.hpp"

namespace perimeter {

void LinkParams::validate() const {
  if (!(length_m > 0.0)) throw ConfigError("link length_m must be > 0");
  if (lanes < 1) throw ConfigError("link lanes must be >= 1");
  if (!(jam_density_veh_per_km_lane > 0.0)) throw ConfigError("link jam_density must be > 0");
  if (!(speed_at_capacity_kmh > 0.0)) throw ConfigError("link speed_at_capacity must be > 0");
  if (!(speed_at_capacity_kmh < free_flow_speed_kmh)) {
    throw ConfigError("link speed_at_capacity must be below free_flow_speed");
  }
  if (!(saturation_flow_veh_per_h_lane > 0.0)) throw ConfigError("link saturation_flow must be > 0");
  // The critical density q_s/u_c has to sit below jam density, otherwise the
  // congested branch of the diagram does not exist.
  if (!(saturation_flow_veh_per_h_lane / speed_at_capacity_kmh < jam_density_veh_per_km_lane)) {
    throw ConfigError("link saturation_flow / speed_at_capacity must be below jam_density");
  }
}

double Link::storage_veh() const {
  return params.jam_density_veh_per_km_lane * params.lanes * length_km();
}

int Link::storage_cap() const {
  return std::max(1, static_cast<int>(std::floor(storage_veh() + 1e-9)));
}

double Link::free_flow_time_s() const {
  return params.length_m / (params.free_flow_speed_kmh / 3.6);
}

double Link::saturation_flow_veh_per_h() const {
  return params.saturation_flow_veh_per_h_lane * params.lanes;
}

double Link::critical_density() const {
  return saturation_flow_veh_per_h() / params.speed_at_capacity_kmh;
}

double Link::fd_speed_kmh(double density) const {
  const double kc = critical_density();
  const double kj = params.jam_density_veh_per_km_lane * params.lanes;
  if (density <= 0.0) return params.free_flow_speed_kmh;
  if (density <= kc) {
    return params.free_flow_speed_kmh -
           (params.free_flow_speed_kmh - params.speed_at_capacity_kmh) * density / kc;
  }
  if (density >= kj) return 0.0;
  return fd_flow(density) / density;
}

double Link::fd_flow(double density) const {
  const double kc = critical_density();
  const double kj = params.jam_density_veh_per_km_lane * params.lanes;
  if (density <= 0.0 || density >= kj) return 0.0;
  if (density <= kc) return density * fd_speed_kmh(density);
  return saturation_flow_veh_per_h() * (kj - density) / (kj - kc);
}

double Link::supply_flow(double density) const {
  return density <= critical_density() ? saturation_flow_veh_per_h() : fd_flow(density);
}

void GridSpec::validate() const {
  if (rows < 2) throw ConfigError("grid rows must be >= 2 (got " + std::to_string(rows) + ")");
  if (cols < 2) throw ConfigError("grid cols must be >= 2 (got " + std::to_string(cols) + ")");
  if (segments_per_block < 1) throw ConfigError("grid segments_per_block must be >= 1");
  link.validate();
}

std::optional<NodeId> Network::intersection_at(int row, int col) const {
  if (row < 0 || col < 0 || row >= rows_ || col >= cols_) return std::nullopt;
  for (const auto& n : nodes_) {
    if (n.intersection && n.fine_row == row * segments_ && n.fine_col == col * segments_) return n.id;
  }
  return std::nullopt;
}

std::size_t Network::intersection_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.intersection; }));
}

std::size_t Network::signalized_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.signalized; }));
}

NodeId Network::add_node(int fine_row, int fine_col, bool intersection, bool signalized, bool zone) {
  Node n;
  n.id = static_cast<NodeId>(nodes_.size());
  n.fine_row = fine_row;
  n.fine_col = fine_col;
  n.intersection = intersection;
  n.signalized = signalized;
  n.zone = zone;
  nodes_.push_back(n);
  if (zone) zones_.push_back(n.id);
  return n.id;
}

LinkId Network::add_link(NodeId from, NodeId to, Axis axis, const LinkParams& params) {
  if (from < 0 || to < 0 || static_cast<std::size_t>(from) >= nodes_.size() ||
      static_cast<std::size_t>(to) >= nodes_.size()) {
    throw ConfigError("link endpoint does not exist");
  }
  params.validate();
  Link l;
  l.id = static_cast<LinkId>(links_.size());
  l.from = from;
  l.to = to;
  l.axis = axis;
  l.params = params;
  links_.push_back(l);
  nodes_[static_cast<std::size_t>(from)].out.push_back(l.id);
  nodes_[static_cast<std::size_t>(to)].in.push_back(l.id);
  return l.id;
}

namespace {

std::vector<bool> reachable(const Network& net, bool forward) {
  std::vector<bool> seen(net.node_count(), false);
  if (net.node_count() == 0) return seen;
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const NodeId n = q.front();
    q.pop();
    const auto& node = net.node(n);
    for (LinkId l : forward ? node.out : node.in) {
      const NodeId next = forward ? net.link(l).to : net.link(l).from;
      if (!seen[static_cast<std::size_t>(next)]) {
        seen[static_cast<std::size_t>(next)] = true;
        q.push(next);
      }
    }
  }
  return seen;
}

// Row street direction: +1 means eastbound (increasing column).
int row_direction(int row, int rows) {
  if (row == 0) return +1;
  if (row == rows - 1) return -1;
  return row % 2 == 0 ? +1 : -1;
}

// Column street direction: +1 means southbound (increasing row).
int col_direction(int col, int cols) {
  if (col == 0) return -1;
  if (col == cols - 1) return +1;
  return col % 2 == 0 ? -1 : +1;
}

}  // namespace

bool Network::strongly_connected() const {
  const auto fwd = reachable(*this, true);
  const auto bwd = reachable(*this, false);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

Network build_grid(const GridSpec& spec) {
  spec.validate();
  Network net;
  net.rows_ = spec.rows;
  net.cols_ = spec.cols;
  net.segments_ = spec.segments_per_block;
  const int s = spec.segments_per_block;

  std::map<std::pair<int, int>, NodeId> at;
  auto node_at = [&](int fr, int fc) {
    auto it = at.find({fr, fc});
    if (it != at.end()) return it->second;
    const bool inter = fr % s == 0 && fc % s == 0;
    const int r = fr / s;
    const int c = fc / s;
    const bool boundary = inter && (r == 0 || c == 0 || r == spec.rows - 1 || c == spec.cols - 1);
    const NodeId id = net.add_node(fr, fc, inter, inter && !boundary, boundary);
    at.emplace(std::make_pair(fr, fc), id);
    return id;
  };

  // Intersections first so their ids are row-major and stable.
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) node_at(r * s, c * s);
  }

  for (int r = 0; r < spec.rows; ++r) {
    const int dir = row_direction(r, spec.rows);
    const int span = (spec.cols - 1) * s;
    for (int step = 0; step < span; ++step) {
      const int a = dir > 0 ? step : span - step;
      const int b = a + dir;
      net.add_link(node_at(r * s, a), node_at(r * s, b), Axis::kRow, spec.link);
    }
  }
  for (int c = 0; c < spec.cols; ++c) {
    const int dir = col_direction(c, spec.cols);
    const int span = (spec.rows - 1) * s;
    for (int step = 0; step < span; ++step) {
      const int a = dir > 0 ? step : span - step;
      const int b = a + dir;
      net.add_link(node_at(a, c * s), node_at(b, c * s), Axis::kColumn, spec.link);
    }
  }
  return net;
}

bool ProtectedRegion::is_entry(LinkId id) const {
  return std::find(entry_links.begin(), entry_links.end(), id) != entry_links.end();
}

ProtectedRegion define_protected_region(const Network& network, const RegionBounds& b) {
  if (b.row_min > b.row_max || b.col_min > b.col_max) {
    throw ConfigError("region bounds are inverted");
  }
  if (b.row_min < 1 || b.col_min < 1 || b.row_max > network.rows() - 2 ||
      b.col_max > network.cols() - 2) {
    throw ConfigError("region bounds must lie strictly inside the grid");
  }
  const int s = network.segments_per_block();
  ProtectedRegion region;
  region.bounds = b;
  region.node_inside.assign(network.node_count(), false);
  for (const auto& n : network.nodes()) {
    region.node_inside[static_cast<std::size_t>(n.id)] =
        n.fine_row >= b.row_min * s && n.fine_row <= b.row_max * s && n.fine_col >= b.col_min * s &&
        n.fine_col <= b.col_max * s;
  }
  region.monitored_mask.assign(network.link_count(), false);
  for (const auto& l : network.links()) {
    const bool from_in = region.node_inside[static_cast<std::size_t>(l.from)];
    const bool to_in = region.node_inside[static_cast<std::size_t>(l.to)];
    if (from_in && to_in) {
      region.monitored.push_back(l.id);
      region.monitored_mask[static_cast<std::size_t>(l.id)] = true;
      region.total_length_m += l.params.length_m;
    } else if (!from_in && to_in) {
      region.entry_links.push_back(l.id);
    } else if (from_in && !to_in) {
      region.exit_links.push_back(l.id);
    }
  }
  if (region.monitored.empty()) throw ConfigError("protected region contains no links");
  if (region.entry_links.empty()) throw ConfigError("protected region has no entry links");
  return region;
}

std::string to_document(const Network& network, const ProtectedRegion& region) {
  using nlohmann::json;
  json doc;
  doc["grid"] = {{"rows", network.rows()},
                 {"cols", network.cols()},
                 {"segments_per_block", network.segments_per_block()}};
  json nodes = json::array();
  for (const auto& n : network.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"fine_row", n.fine_row},
                     {"fine_col", n.fine_col},
                     {"intersection", n.intersection},
                     {"signalized", n.signalized},
                     {"zone", n.zone}});
  }
  doc["nodes"] = std::move(nodes);
  json links = json::array();
  for (const auto& l : network.links()) {
    links.push_back({{"id", l.id},
                     {"from", l.from},
                     {"to", l.to},
                     {"axis", l.axis == Axis::kRow ? "row" : "column"},
                     {"length_m", l.params.length_m},
                     {"lanes", l.params.lanes},
                     {"jam_density_veh_per_km_lane", l.params.jam_density_veh_per_km_lane},
                     {"free_flow_speed_kmh", l.params.free_flow_speed_kmh},
                     {"speed_at_capacity_kmh", l.params.speed_at_capacity_kmh},
                     {"saturation_flow_veh_per_h_lane", l.params.saturation_flow_veh_per_h_lane}});
  }
  doc["links"] = std::move(links);
  doc["zones"] = network.zones();
  doc["region"] = {{"row_min", region.bounds.row_min},
                   {"row_max", region.bounds.row_max},
                   {"col_min", region.bounds.col_min},
                   {"col_max", region.bounds.col_max},
                   {"monitored_links", region.monitored},
                   {"entry_links", region.entry_links},
                   {"exit_links", region.exit_links},
                   {"total_length_m", region.total_length_m}};
  return doc.dump(2);
}

}  // namespace perimeter
