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

#include "perimeter/plant.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "perimeter/errors.hpp"

namespace perimeter {

Router::Router(const Network& network) : network_(&network) {
  cost_.reserve(network.link_count());
  for (const auto& l : network.links()) cost_.push_back(l.free_flow_time_s());
}

void Router::set_costs(std::vector<double> link_cost_s) {
  if (link_cost_s.size() != network_->link_count()) throw InputError("router cost vector size mismatch");
  cost_ = std::move(link_cost_s);
  trees_.clear();
}

const Router::Tree& Router::tree(NodeId destination) {
  auto it = trees_.find(destination);
  if (it != trees_.end()) return it->second;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Tree t;
  t.dist.assign(network_->node_count(), kInf);
  t.next.assign(network_->node_count(), -1);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  t.dist[static_cast<std::size_t>(destination)] = 0.0;
  open.emplace(0.0, destination);
  while (!open.empty()) {
    const auto [d, v] = open.top();
    open.pop();
    if (d > t.dist[static_cast<std::size_t>(v)]) continue;
    for (LinkId l : network_->node(v).in) {
      const NodeId u = network_->link(l).from;
      const double nd = d + cost_[static_cast<std::size_t>(l)];
      if (nd < t.dist[static_cast<std::size_t>(u)]) {
        t.dist[static_cast<std::size_t>(u)] = nd;
        t.next[static_cast<std::size_t>(u)] = l;
        open.emplace(nd, u);
      }
    }
  }
  return trees_.emplace(destination, std::move(t)).first->second;
}

std::vector<LinkId> Router::route(NodeId from, NodeId to) {
  std::vector<LinkId> path;
  if (from == to) return path;
  const Tree& t = tree(to);
  NodeId at = from;
  while (at != to) {
    const LinkId l = t.next[static_cast<std::size_t>(at)];
    if (l < 0) return {};
    path.push_back(l);
    at = network_->link(l).to;
  }
  return path;
}

double Router::cost(NodeId from, NodeId to) {
  return tree(to).dist[static_cast<std::size_t>(from)];
}

Plant::Plant(const Network& network, const SignalTiming& timing, PlantOptions options)
    : network_(&network),
      timing_(timing),
      options_(options),
      state_(network.link_count()),
      plans_(network.node_count()),
      router_(network),
      before_(network.link_count(), 0) {
  timing_.validate();
  if (!(options_.source_flow_veh_per_h > 0.0)) throw ConfigError("source_flow_veh_per_h must be > 0");
  for (const auto& n : network.nodes()) {
    if (n.signalized) plans_[static_cast<std::size_t>(n.id)] = equal_plan(n.id, 2, timing_);
  }
}

void Plant::set_plan(const SignalPlan& plan) {
  const auto idx = static_cast<std::size_t>(plan.node);
  if (idx >= plans_.size() || !network_->node(plan.node).signalized) {
    throw InputError("signal plan for a node without a signal");
  }
  if (!plan.valid(timing_.min_green_s)) throw InputError("signal plan does not fill the cycle");
  plans_[idx] = plan;
}

const SignalPlan* Plant::plan_at(NodeId node) const {
  const auto& p = plans_.at(static_cast<std::size_t>(node));
  return p ? &*p : nullptr;
}

std::optional<VehicleId> Plant::spawn(NodeId origin, NodeId destination, double t_s) {
  auto route = router_.route(origin, destination);
  if (route.empty()) return std::nullopt;
  Vehicle v;
  v.id = static_cast<VehicleId>(vehicles_.size());
  v.origin = origin;
  v.destination = destination;
  v.route = std::move(route);
  v.departure_s = t_s;
  state_[static_cast<std::size_t>(v.route.front())].source.push_back(v.id);
  vehicles_.push_back(std::move(v));
  ++generated_;
  return vehicles_.back().id;
}

double Plant::green_time(const Link& link, double t_s, double dt_s) const {
  const auto& plan = plans_[static_cast<std::size_t>(link.to)];
  if (!plan) return dt_s;
  return plan->green_overlap(phase_of(link.axis), t_s, dt_s);
}

void Plant::enter_link(Vehicle& v, LinkId link, double t_s) {
  auto& ls = state_[static_cast<std::size_t>(link)];
  if (options_.supply_limit) ls.receive_credit -= 1.0;
  ls.queue.push_back({v.id, t_s + network_->link(link).free_flow_time_s()});
  ++ls.vehicle_count;
  ++ls.inflow_this_step;
  ++ls.inflow_total;
}

void Plant::step(double t_s, double dt_s) {
  if (!(dt_s > 0.0)) throw InputError("step dt must be > 0");
  const std::size_t n = state_.size();
  for (std::size_t i = 0; i < n; ++i) {
    before_[i] = state_[i].vehicle_count;
    state_[i].inflow_this_step = 0;
    state_[i].outflow_this_step = 0;
  }
  // Rotating the service order keeps merges fair over time.
  const std::size_t offset = n == 0 ? 0 : static_cast<std::size_t>(ticks_ % static_cast<std::int64_t>(n));
  if (options_.supply_limit) {
    for (std::size_t i = 0; i < n; ++i) {
      const Link& link = network_->links()[i];
      const double rate = link.supply_flow(state_[i].vehicle_count / link.length_km()) / 3600.0;
      state_[i].receive_credit = std::min(state_[i].receive_credit + rate * dt_s, std::max(1.0, rate * dt_s));
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (k + offset) % n;
    const Link& link = network_->links()[i];
    LinkState& ls = state_[i];
    const double green = green_time(link, t_s, dt_s);
    if (green <= 0.0) {
      ls.discharge_credit = 0.0;
      continue;
    }
    const double rate = link.saturation_flow_veh_per_h() / 3600.0;
    ls.discharge_credit = std::min(ls.discharge_credit + rate * green, std::max(1.0, rate * dt_s));
    while (ls.discharge_credit >= 1.0 && !ls.queue.empty()) {
      const QueuedVehicle head = ls.queue.front();
      if (head.ready_s > t_s + 1e-9) break;
      Vehicle& v = vehicles_[static_cast<std::size_t>(head.vehicle)];
      const bool last = v.leg + 1 == v.route.size();
      LinkId next = -1;
      if (!last) {
        next = v.route[v.leg + 1];
        const auto& ns = state_[static_cast<std::size_t>(next)];
        if (ns.vehicle_count >= network_->link(next).storage_cap()) break;
        if (options_.supply_limit && ns.receive_credit < 1.0) break;
      }
      ls.queue.pop_front();
      --ls.vehicle_count;
      ++ls.outflow_this_step;
      ++ls.outflow_total;
      ls.discharge_credit -= 1.0;
      v.distance_m += link.params.length_m;
      v.free_flow_time_s += link.free_flow_time_s();
      if (last) {
        v.status = VehicleStatus::kArrived;
        v.arrival_s = t_s;
        ++exited_;
      } else {
        ++v.leg;
        enter_link(v, next, t_s);
      }
    }
  }

  const double source_rate = options_.source_flow_veh_per_h / 3600.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (k + offset) % n;
    LinkState& ls = state_[i];
    ls.source_credit = std::min(ls.source_credit + source_rate * dt_s, std::max(1.0, source_rate * dt_s));
    const int cap = network_->links()[i].storage_cap();
    while (ls.source_credit >= 1.0 && !ls.source.empty() && ls.vehicle_count < cap &&
           (!options_.supply_limit || ls.receive_credit >= 1.0)) {
      Vehicle& v = vehicles_[static_cast<std::size_t>(ls.source.front())];
      ls.source.pop_front();
      ls.source_credit -= 1.0;
      v.status = VehicleStatus::kEnRoute;
      enter_link(v, static_cast<LinkId>(i), t_s);
      ++ls.source_inflow_total;
      ++entered_;
    }
  }

  std::int64_t total = 0;
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    LinkState& ls = state_[i];
    ls.occupancy_integral_veh_s += ls.vehicle_count * dt_s;
    total += ls.vehicle_count;
    ok = ok && ls.vehicle_count == before_[i] + ls.inflow_this_step - ls.outflow_this_step &&
         ls.vehicle_count == static_cast<int>(ls.queue.size()) && ls.vehicle_count >= 0 &&
         ls.vehicle_count <= network_->links()[i].storage_cap();
  }
  ok = ok && total + exited_ == entered_ && entered_ <= generated_;
  if (!ok) ++violations_;
  ++ticks_;
}

std::int64_t Plant::in_network() const {
  std::int64_t total = 0;
  for (const auto& ls : state_) total += ls.vehicle_count;
  return total;
}

double Plant::link_travel_time_estimate(LinkId id) const {
  const Link& link = network_->link(id);
  double share = 1.0;
  if (const SignalPlan* plan = plan_at(link.to)) share = std::max(0.05, plan->green_share(phase_of(link.axis)));
  const double service = link.saturation_flow_veh_per_h() / 3600.0 * share;
  return link.free_flow_time_s() + state_[static_cast<std::size_t>(id)].vehicle_count / service;
}

void Plant::refresh_route_costs() {
  std::vector<double> cost(network_->link_count());
  for (std::size_t i = 0; i < cost.size(); ++i) cost[i] = link_travel_time_estimate(static_cast<LinkId>(i));
  router_.set_costs(std::move(cost));
}

int Plant::reroute(double fraction, Rng& rng) {
  if (fraction <= 0.0) return 0;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int changed = 0;
  for (auto& v : vehicles_) {
    if (v.status != VehicleStatus::kEnRoute) continue;
    if (coin(rng) >= fraction) continue;
    const NodeId at = network_->link(v.route[v.leg]).to;
    if (at == v.destination) continue;
    auto tail = router_.route(at, v.destination);
    if (tail.empty()) continue;
    if (std::equal(tail.begin(), tail.end(), v.route.begin() + static_cast<std::ptrdiff_t>(v.leg) + 1,
                   v.route.end())) {
      continue;
    }
    v.route.resize(v.leg + 1);
    v.route.insert(v.route.end(), tail.begin(), tail.end());
    ++changed;
  }
  return changed;
}

}  // namespace perimeter
