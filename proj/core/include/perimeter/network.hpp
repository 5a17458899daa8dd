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

/// @file network.hpp
/// @brief One-way grid networks and the protected region inside them.
///
/// Grids are built from row streets (running along a row, west/east) and
/// column streets (running along a column, north/south). Every street is
/// one-way. The perimeter streets form a clockwise loop and interior streets
/// alternate direction, which keeps the link graph strongly connected for any
/// grid with at least two rows and two columns.
///
/// A block between two adjacent intersections may be split into several
/// links by unsignalized mid-block nodes (`segments_per_block`).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace perimeter {

using LinkId = std::int32_t;
using NodeId = std::int32_t;

enum class Axis : std::uint8_t { kRow, kColumn };

/// Per-link fundamental-diagram and geometry defaults.
struct LinkParams {
  double length_m = 150.0;
  int lanes = 1;
  double jam_density_veh_per_km_lane = 160.0;
  double free_flow_speed_kmh = 50.0;
  double speed_at_capacity_kmh = 30.0;
  double saturation_flow_veh_per_h_lane = 1800.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

struct Link {
  LinkId id = -1;
  NodeId from = -1;
  NodeId to = -1;
  Axis axis = Axis::kRow;
  LinkParams params;

  double length_km() const { return params.length_m / 1000.0; }
  /// Vehicles the link holds at jam density (k_j * lanes * length).
  double storage_veh() const;
  /// Integer storage used by the plant.
  int storage_cap() const;
  double free_flow_time_s() const;
  /// q_s * lanes.
  double saturation_flow_veh_per_h() const;
  /// Density (veh/km, all lanes) where the link reaches capacity at speed u_c.
  double critical_density() const;
  /// Piecewise fundamental diagram: speed falls linearly from u_f to u_c on
  /// the free-flow branch; flow falls linearly to zero at jam density on the
  /// congested branch.
  double fd_flow(double density_veh_per_km) const;
  double fd_speed_kmh(double density_veh_per_km) const;
  /// Receiving flow: q_s * lanes up to the critical density, then the
  /// congested branch of the diagram.
  double supply_flow(double density_veh_per_km) const;
};

struct Node {
  NodeId id = -1;
  /// Position on the fine lattice; intersections sit at multiples of
  /// `segments_per_block`.
  int fine_row = 0;
  int fine_col = 0;
  bool intersection = false;
  bool signalized = false;
  bool zone = false;
  std::vector<LinkId> in;
  std::vector<LinkId> out;
};

struct GridSpec {
  int rows = 8;
  int cols = 8;
  int segments_per_block = 2;
  LinkParams link;

  void validate() const;
};

class Network {
 public:
  Network() = default;

  const std::vector<Link>& links() const { return links_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<NodeId>& zones() const { return zones_; }
  const Link& link(LinkId id) const { return links_.at(static_cast<std::size_t>(id)); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t link_count() const { return links_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int segments_per_block() const { return segments_; }

  std::optional<NodeId> intersection_at(int row, int col) const;
  std::size_t intersection_count() const;
  std::size_t signalized_count() const;

  /// Every node reaches every other node along directed links.
  bool strongly_connected() const;

  /// Adds a link between existing nodes; used by the grid builder and by
  /// tests that need hand-made topologies.
  LinkId add_link(NodeId from, NodeId to, Axis axis, const LinkParams& params);
  NodeId add_node(int fine_row, int fine_col, bool intersection, bool signalized, bool zone);

 private:
  friend Network build_grid(const GridSpec& spec);

  std::vector<Link> links_;
  std::vector<Node> nodes_;
  std::vector<NodeId> zones_;
  int rows_ = 0;
  int cols_ = 0;
  int segments_ = 1;
};

/// Builds a one-way grid. Interior intersections are signalized; boundary
/// intersections carry one origin/destination zone each.
Network build_grid(const GridSpec& spec);

/// Inclusive intersection-index rectangle.
struct RegionBounds {
  int row_min = 2;
  int row_max = 5;
  int col_min = 2;
  int col_max = 5;
};

struct ProtectedRegion {
  RegionBounds bounds;
  std::vector<LinkId> monitored;
  std::vector<LinkId> entry_links;
  std::vector<LinkId> exit_links;
  double total_length_m = 0.0;
  /// Indexed by LinkId.
  std::vector<bool> monitored_mask;
  std::vector<bool> node_inside;

  bool contains(LinkId id) const {
    return monitored_mask.at(static_cast<std::size_t>(id));
  }
  bool is_entry(LinkId id) const;
  double total_length_km() const { return total_length_m / 1000.0; }
};

/// Monitored links have both endpoints inside the bounds; entry links cross
/// the boundary inward and exit links outward.
ProtectedRegion define_protected_region(const Network& network, const RegionBounds& bounds);

/// Structured text (JSON) description of a network and its region.
std::string to_document(const Network& network, const ProtectedRegion& region);

}  // namespace perimeter
