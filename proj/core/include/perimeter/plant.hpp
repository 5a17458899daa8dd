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

/// @file plant.hpp
/// @brief Mesoscopic point-queue traffic plant.
///
/// Vehicles traverse a link at free-flow speed and then wait in a FIFO queue
/// at the downstream node. The head of the queue leaves when the approach has
/// green, discharge credit (saturation flow) is available and the next link
/// on its route has spare jam storage. A blocked head vehicle blocks the
/// whole queue behind it. With the supply limit on, a link past its critical
/// density also admits vehicles no faster than its congested-branch flow. Vehicles wait at their origin zone in an unbounded
/// source queue until their first link has room.

#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "perimeter/demand.hpp"
#include "perimeter/network.hpp"
#include "perimeter/signals.hpp"

namespace perimeter {

using VehicleId = std::int32_t;

enum class VehicleStatus : std::uint8_t { kWaiting, kEnRoute, kArrived };

struct Vehicle {
  VehicleId id = -1;
  NodeId origin = -1;
  NodeId destination = -1;
  std::vector<LinkId> route;
  /// Index into `route` of the link the vehicle is on (or waits to enter).
  std::size_t leg = 0;
  double departure_s = 0.0;
  std::optional<double> arrival_s;
  double distance_m = 0.0;
  /// Free-flow time of the links actually completed.
  double free_flow_time_s = 0.0;
  VehicleStatus status = VehicleStatus::kWaiting;
};

struct QueuedVehicle {
  VehicleId vehicle = -1;
  double ready_s = 0.0;
};

struct LinkState {
  int vehicle_count = 0;
  int inflow_this_step = 0;
  int outflow_this_step = 0;
  std::deque<QueuedVehicle> queue;
  /// Vehicles waiting at the origin zone to enter this link.
  std::deque<VehicleId> source;
  double discharge_credit = 0.0;
  double receive_credit = 0.0;
  double source_credit = 0.0;

  // Running totals since the start of the run.
  std::int64_t inflow_total = 0;
  std::int64_t outflow_total = 0;
  std::int64_t source_inflow_total = 0;
  double occupancy_integral_veh_s = 0.0;
};

/// Shortest-time routing on current link cost estimates. Trees toward each
/// destination are built lazily and dropped when costs change.
class Router {
 public:
  explicit Router(const Network& network);

  void set_costs(std::vector<double> link_cost_s);
  const std::vector<double>& costs() const { return cost_; }

  /// Link sequence from `from` to `to`; empty when from == to or unreachable.
  std::vector<LinkId> route(NodeId from, NodeId to);
  double cost(NodeId from, NodeId to);

 private:
  struct Tree {
    std::vector<double> dist;
    std::vector<LinkId> next;
  };
  const Tree& tree(NodeId destination);

  const Network* network_;
  std::vector<double> cost_;
  std::unordered_map<NodeId, Tree> trees_;
};

struct PlantOptions {
  /// Rate at which an origin zone can load vehicles onto a link.
  double source_flow_veh_per_h = 1800.0;
  /// Limit what a link accepts to its receiving flow (congested branch of
  /// its fundamental diagram). Off, only jam storage blocks entry.
  bool supply_limit = true;
};

class Plant {
 public:
  Plant(const Network& network, const SignalTiming& timing, PlantOptions options = {});

  const Network& network() const { return *network_; }

  void set_plan(const SignalPlan& plan);
  const SignalPlan* plan_at(NodeId node) const;

  /// Creates a vehicle at its origin with a shortest-time route. Returns
  /// std::nullopt when the destination is unreachable.
  std::optional<VehicleId> spawn(NodeId origin, NodeId destination, double t_s);

  /// Advances the plant over [t, t + dt).
  void step(double t_s, double dt_s);

  /// Recomputes routing costs from the current state.
  void refresh_route_costs();
  /// Sends a `fraction` of en-route vehicles onto fresh shortest-time paths
  /// from their current link's downstream node. Returns how many changed.
  int reroute(double fraction, Rng& rng);

  /// Free-flow time plus an estimate of the delay to discharge the vehicles
  /// currently on the link at its green-scaled saturation flow.
  double link_travel_time_estimate(LinkId id) const;

  const std::vector<LinkState>& link_states() const { return state_; }
  const LinkState& link_state(LinkId id) const { return state_.at(static_cast<std::size_t>(id)); }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  Router& router() { return router_; }

  std::int64_t generated() const { return generated_; }
  std::int64_t entered() const { return entered_; }
  std::int64_t exited() const { return exited_; }
  std::int64_t waiting() const { return generated_ - entered_; }
  std::int64_t in_network() const;
  /// Steps where a conservation identity failed (should stay zero).
  std::int64_t conservation_violations() const { return violations_; }

 private:
  void enter_link(Vehicle& v, LinkId link, double t_s);
  double green_time(const Link& link, double t_s, double dt_s) const;

  const Network* network_;
  SignalTiming timing_;
  PlantOptions options_;
  std::vector<LinkState> state_;
  std::vector<std::optional<SignalPlan>> plans_;
  std::vector<Vehicle> vehicles_;
  Router router_;
  std::int64_t generated_ = 0;
  std::int64_t entered_ = 0;
  std::int64_t exited_ = 0;
  std::int64_t violations_ = 0;
  std::int64_t ticks_ = 0;
  std::vector<int> before_;
};

}  // namespace perimeter
