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

#include "perimeter/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "perimeter/config.hpp"
#include "perimeter/errors.hpp"

namespace perimeter {

void ScenarioConfig::validate() const {
  grid.validate();
  timing.validate();
  demand.validate();
  if (controller.kind == ControllerKind::kSmc) controller.smc.validate();
  if (controller.kind == ControllerKind::kPic) controller.pic.validate();
  controller.activation.validate();
  if (!(kbar_veh_per_km > 0.0)) throw ConfigError("kbar_veh_per_km must be > 0");
  if (!(horizon_s >= timing.cycle_s)) throw ConfigError("horizon_s must cover at least one cycle");
  if (std::fmod(horizon_s, 1.0) != 0.0) throw ConfigError("horizon_s must be a whole number of seconds");
  if (std::fmod(timing.cycle_s, 1.0) != 0.0) throw ConfigError("cycle_s must be a whole number of seconds");
  if (!(reroute_period_s >= 1.0)) throw ConfigError("reroute_period_s must be >= 1");
  if (!(reroute_fraction >= 0.0 && reroute_fraction <= 1.0)) throw ConfigError("reroute_fraction must be in [0, 1]");
  if (!(webster_period_s >= timing.cycle_s)) throw ConfigError("webster_period_s must be >= cycle_s");
  if (!(plant.source_flow_veh_per_h > 0.0)) throw ConfigError("source_flow_veh_per_h must be > 0");
  if (fuel.l_per_km < 0.0 || fuel.l_per_delay_s < 0.0) throw ConfigError("fuel coefficients must be >= 0");
}

std::string to_string(OdPattern od) {
  switch (od) {
    case OdPattern::kOppositeSides: return "opposite_sides";
    case OdPattern::kThroughRegion: return "through_region";
    case OdPattern::kAllPairs: return "all_pairs";
  }
  return "opposite_sides";
}

OdPattern od_pattern_from_string(const std::string& s) {
  if (s == "opposite_sides") return OdPattern::kOppositeSides;
  if (s == "through_region") return OdPattern::kThroughRegion;
  if (s == "all_pairs") return OdPattern::kAllPairs;
  throw ConfigError("unknown od_pattern '" + s + "'");
}

namespace {

struct EntryGate {
  LinkId link;
  NodeId node;
  int phase;
};

/// Splits the usable green of a node between requested phase greens. A
/// single request leaves the rest of the cycle to the other phase.
SignalPlan gated_plan(NodeId node, const std::vector<std::optional<double>>& request, const SignalTiming& timing) {
  SignalPlan plan = equal_plan(node, 2, timing);
  const double usable = timing.cycle_s - plan.total_lost_s();
  if (request[0] && request[1]) {
    const double sum = *request[0] + *request[1];
    plan.green_s = {usable * *request[0] / sum, usable * *request[1] / sum};
  } else if (request[0]) {
    plan.green_s = {*request[0], usable - *request[0]};
  } else if (request[1]) {
    plan.green_s = {usable - *request[1], *request[1]};
  }
  return plan;
}

std::vector<OdPair> od_pairs(const Network& net, OdPattern od, const RegionBounds& region) {
  switch (od) {
    case OdPattern::kOppositeSides: return opposite_side_pairs(net);
    case OdPattern::kThroughRegion: return through_region_pairs(net, region);
    case OdPattern::kAllPairs: return all_zone_pairs(net);
  }
  return {};
}

class ScenarioRunner {
 public:
  explicit ScenarioRunner(const ScenarioConfig& cfg)
      : cfg_(cfg),
        net_(build_grid(cfg.grid)),
        region_(define_protected_region(net_, cfg.region)),
        plant_(net_, cfg.timing, cfg.plant),
        pairs_(od_pairs(net_, cfg.od, cfg.region)),
        controller_(cfg.controller, cfg.kbar_veh_per_km, region_.total_length_m, cfg.timing.cycle_s) {
    const auto lo = static_cast<std::uint32_t>(cfg.seed);
    const auto hi = static_cast<std::uint32_t>(cfg.seed >> 32);
    std::seed_seq demand_seq{lo, hi, 1u};
    std::seed_seq route_seq{lo, hi, 2u};
    demand_rng_.seed(demand_seq);
    route_rng_.seed(route_seq);

    for (LinkId e : region_.entry_links) {
      const Link& l = net_.link(e);
      if (!net_.node(l.to).signalized) throw ConfigError("entry link ends at an unsignalized node");
      gates_.push_back({e, l.to, phase_of(l.axis)});
    }
    const std::size_t n = net_.link_count();
    occ_mark_.assign(n, 0.0);
    out_mark_.assign(n, 0);
    in_mark_.assign(n, 0);
    src_mark_.assign(n, 0);
    webster_out_mark_.assign(n, 0);
    for (const auto& node : net_.nodes()) {
      if (node.signalized) webster_[static_cast<std::size_t>(node.id)] = *plant_.plan_at(node.id);
    }
  }

  ScenarioResult run() {
    ScenarioResult result;
    result.entry_links = region_.entry_links;
    const auto horizon = static_cast<std::int64_t>(cfg_.horizon_s);
    const auto cycle = static_cast<std::int64_t>(cfg_.timing.cycle_s);
    const auto webster = static_cast<std::int64_t>(std::llround(cfg_.webster_period_s));
    const auto reroute = static_cast<std::int64_t>(std::llround(cfg_.reroute_period_s));
    std::vector<double> carry(pairs_.size(), 0.0);

    for (std::int64_t tick = 0; tick < horizon; ++tick) {
      const double t = static_cast<double>(tick);
      if (tick > 0 && tick % webster == 0) update_webster(t);
      if (tick > 0 && tick % cycle == 0) {
        plant_.refresh_route_costs();
        end_of_cycle(static_cast<int>(tick / cycle), t, result);
      }
      if (tick > 0 && tick % reroute == 0) plant_.reroute(cfg_.reroute_fraction, route_rng_);
      if (t < cfg_.demand.duration_s) {
        const auto counts = load_demand(cfg_.demand, pairs_, t, 1.0, cfg_.demand_mode, demand_rng_, carry);
        for (std::size_t i = 0; i < counts.size(); ++i) {
          for (int c = 0; c < counts[i]; ++c) plant_.spawn(pairs_[i].origin, pairs_[i].destination, t);
        }
      }
      plant_.step(t, 1.0);
    }
    result.metrics = compute_metrics(plant_.vehicles(), cfg_.horizon_s, cfg_.fuel);
    result.conservation_violations = plant_.conservation_violations();
    for (const auto& r : result.cycles) {
      result.peak_density_veh_per_km = std::max(result.peak_density_veh_per_km, r.k_veh_per_km);
    }
    result.config = cfg_;
    return result;
  }

 private:
  void update_webster(double t) {
    const double window_h = (t - webster_mark_s_) / 3600.0;
    for (const auto& node : net_.nodes()) {
      if (!node.signalized) continue;
      std::vector<ApproachFlow> flows(2);
      for (LinkId l : node.in) {
        const Link& link = net_.link(l);
        const auto& ls = plant_.link_state(l);
        const auto idx = static_cast<std::size_t>(l);
        const double demand = static_cast<double>(ls.outflow_total - webster_out_mark_[idx] + ls.vehicle_count) / window_h;
        auto& f = flows[static_cast<std::size_t>(phase_of(link.axis))];
        const double sat = link.saturation_flow_veh_per_h();
        // The critical approach of a phase sets its flow ratio.
        if (demand / sat > f.flow_veh_per_h / f.saturation_veh_per_h) f = {demand, sat};
      }
      webster_[static_cast<std::size_t>(node.id)] = webster_splits(node.id, flows, cfg_.timing);
    }
    for (std::size_t i = 0; i < webster_out_mark_.size(); ++i) {
      webster_out_mark_[i] = plant_.link_states()[i].outflow_total;
    }
    webster_mark_s_ = t;
    apply_plans();
  }

  void end_of_cycle(int n, double t, ScenarioResult& result) {
    const double dt = cfg_.timing.cycle_s;
    const double per_h = 3600.0 / dt;
    const auto& states = plant_.link_states();
    std::vector<LinkValue> densities;
    std::vector<LinkValue> flows;
    densities.reserve(region_.monitored.size());
    flows.reserve(region_.monitored.size());
    for (LinkId z : region_.monitored) {
      const auto idx = static_cast<std::size_t>(z);
      const Link& link = net_.link(z);
      const double mean_count = (states[idx].occupancy_integral_veh_s - occ_mark_[idx]) / dt;
      const DetectorSample sample{z, n - 1, occupancy_from_state(mean_count, link),
                                  static_cast<double>(states[idx].outflow_total - out_mark_[idx]) * per_h};
      densities.push_back({z, link_density(sample, link)});
      flows.push_back({z, sample.flow_veh_per_h});
    }

    CycleRecord rec;
    rec.cycle = n;
    rec.t_s = t;
    rec.k_veh_per_km = network_density(densities, net_, region_);
    rec.q_veh_per_h = network_flow(flows, net_, region_);
    for (LinkId e : region_.entry_links) {
      const auto idx = static_cast<std::size_t>(e);
      rec.q_in_veh_per_h += static_cast<double>(states[idx].outflow_total - out_mark_[idx]) * per_h;
    }
    for (LinkId x : region_.exit_links) {
      const auto idx = static_cast<std::size_t>(x);
      const auto entered = (states[idx].inflow_total - in_mark_[idx]) - (states[idx].source_inflow_total - src_mark_[idx]);
      rec.q_out_veh_per_h += static_cast<double>(entered) * per_h;
    }
    for (LinkId z : region_.monitored) {
      const auto idx = static_cast<std::size_t>(z);
      rec.q_d_veh_per_h += static_cast<double>(states[idx].source_inflow_total - src_mark_[idx]) * per_h;
    }

    // Demand seen at each entry over the cycle, for the split of the command.
    std::vector<EntryApproach> entries;
    entries.reserve(gates_.size());
    for (const auto& g : gates_) {
      const auto idx = static_cast<std::size_t>(g.link);
      const Link& link = net_.link(g.link);
      const double demand = static_cast<double>(states[idx].outflow_total - out_mark_[idx] + states[idx].vehicle_count) * per_h;
      entries.push_back({g.link, link.saturation_flow_veh_per_h(), demand});
    }

    const ControlDecision d = controller_.update({rec.k_veh_per_km, rec.q_in_veh_per_h, rec.q_out_veh_per_h, rec.q_d_veh_per_h});
    rec.active = d.active;
    rec.q_in_command_veh_per_h = d.q_in_command;
    rec.u_unclamped = d.u_unclamped;
    rec.sliding = d.sliding;
    rec.lyapunov = d.lyapunov;
    rec.saturated = d.saturated;
    gated_.reset();
    if (d.active) gated_ = green_allocation(d.q_in_command, entries, cfg_.timing);
    apply_plans();

    for (const auto& g : gates_) {
      const SignalPlan* plan = plant_.plan_at(g.node);
      const double green = plan->green_s[static_cast<std::size_t>(g.phase)];
      rec.entry_green_s.push_back(green);
      rec.green_capacity_veh_per_h += green / cfg_.timing.cycle_s * net_.link(g.link).saturation_flow_veh_per_h();
    }
    rec.in_network = plant_.in_network();
    rec.waiting = plant_.waiting();
    rec.exited = plant_.exited();

    if (cfg_.record_links) {
      for (const auto& link : net_.links()) {
        const auto idx = static_cast<std::size_t>(link.id);
        result.links.push_back({n, link.id, states[idx].vehicle_count,
                                static_cast<int>(states[idx].inflow_total - in_mark_[idx]),
                                static_cast<int>(states[idx].outflow_total - out_mark_[idx])});
      }
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      occ_mark_[i] = states[i].occupancy_integral_veh_s;
      out_mark_[i] = states[i].outflow_total;
      in_mark_[i] = states[i].inflow_total;
      src_mark_[i] = states[i].source_inflow_total;
    }
    result.cycles.push_back(std::move(rec));
  }

  void apply_plans() {
    std::map<NodeId, std::vector<std::optional<double>>> requests;
    if (gated_) {
      for (std::size_t i = 0; i < gates_.size(); ++i) {
        auto& r = requests[gates_[i].node];
        r.resize(2);
        r[static_cast<std::size_t>(gates_[i].phase)] = gated_->green_s[i];
      }
    }
    for (const auto& [node, plan] : webster_) {
      const auto it = requests.find(static_cast<NodeId>(node));
      plant_.set_plan(it == requests.end() ? plan : gated_plan(static_cast<NodeId>(node), it->second, cfg_.timing));
    }
  }

  ScenarioConfig cfg_;
  Network net_;
  ProtectedRegion region_;
  Plant plant_;
  std::vector<OdPair> pairs_;
  PerimeterController controller_;
  Rng demand_rng_;
  Rng route_rng_;
  std::vector<EntryGate> gates_;
  std::map<std::size_t, SignalPlan> webster_;
  std::optional<GreenAllocation> gated_;
  double webster_mark_s_ = 0.0;
  std::vector<double> occ_mark_;
  std::vector<std::int64_t> out_mark_;
  std::vector<std::int64_t> in_mark_;
  std::vector<std::int64_t> src_mark_;
  std::vector<std::int64_t> webster_out_mark_;
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioRunner runner(cfg);
  return runner.run();
}

Metrics compute_metrics(std::span<const Vehicle> vehicles, double horizon_s, const FuelModel& fuel) {
  Metrics m;
  double tt = 0.0;
  double delay = 0.0;
  double distance_m = 0.0;
  for (const auto& v : vehicles) {
    const double arrival = v.arrival_s.value_or(horizon_s);
    if (v.arrival_s) ++m.arrived;
    else ++m.unfinished;
    const double travel = std::max(0.0, arrival - v.departure_s);
    tt += travel;
    delay += std::max(0.0, travel - v.free_flow_time_s);
    distance_m += v.distance_m;
    ++m.vehicles;
  }
  if (m.vehicles == 0) return m;
  const double n = static_cast<double>(m.vehicles);
  m.no_traffic = false;
  m.mean_travel_time_s = tt / n;
  m.mean_delay_s = delay / n;
  m.total_distance_km = distance_m / 1000.0;
  m.total_time_h = tt / 3600.0;
  m.mean_speed_kmh = m.total_time_h > 0.0 ? m.total_distance_km / m.total_time_h : 0.0;
  m.fuel_l_per_veh = (fuel.l_per_km * m.total_distance_km + fuel.l_per_delay_s * delay) / n;
  return m;
}

Comparison compare(const Metrics& baseline, const Metrics& treated) {
  Comparison c;
  auto pct = [&c](double b, double t) {
    if (b == 0.0) {
      c.undefined = true;
      return std::numeric_limits<double>::quiet_NaN();
    }
    return 100.0 * (t - b) / b;
  };
  c.travel_time_pct = pct(baseline.mean_travel_time_s, treated.mean_travel_time_s);
  c.delay_pct = pct(baseline.mean_delay_s, treated.mean_delay_s);
  c.fuel_pct = pct(baseline.fuel_l_per_veh, treated.fuel_l_per_veh);
  c.speed_pct = pct(baseline.mean_speed_kmh, treated.mean_speed_kmh);
  return c;
}

RegulationError regulation_error(std::span<const CycleRecord> cycles, double kbar_veh_per_km,
                                 const ActivationConfig& activation) {
  ActivationTracker tracker(activation);
  RegulationError r;
  double sum = 0.0;
  for (const auto& c : cycles) {
    tracker.update(c.k_veh_per_km, kbar_veh_per_km);
    if (!tracker.active()) continue;
    sum += std::abs(c.k_veh_per_km - kbar_veh_per_km);
    ++r.cycles;
  }
  r.mean_abs_veh_per_km = r.cycles > 0 ? sum / r.cycles : 0.0;
  return r;
}

std::vector<NfdSample> nfd_scatter(std::span<const CycleRecord> cycles) {
  std::vector<NfdSample> out;
  out.reserve(cycles.size());
  for (const auto& c : cycles) out.push_back({c.cycle, c.k_veh_per_km, c.q_veh_per_h});
  return out;
}

std::vector<NfdSample> parse_nfd_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "cycle,k_vehkm,q_vehh") throw InputError("nfd csv: unexpected header");
  std::vector<NfdSample> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    NfdSample s;
    char c1 = 0;
    char c2 = 0;
    std::istringstream ls(line);
    if (!(ls >> s.cycle >> c1 >> s.density_veh_per_km >> c2 >> s.flow_veh_per_h) || c1 != ',' || c2 != ',') {
      throw InputError("nfd csv: malformed row " + std::to_string(row));
    }
    out.push_back(s);
  }
  return out;
}

void apply_parameter(ScenarioConfig& cfg, const std::string& name, double value) {
  if (name == "lambda_per_h") cfg.controller.smc.lambda_per_h = value;
  else if (name == "eta") cfg.controller.smc.eta = value;
  else if (name == "alpha") cfg.controller.smc.alpha = value;
  else if (name == "beta") cfg.controller.smc.beta = value;
  else if (name == "mu") cfg.controller.pic.mu = value;
  else if (name == "zeta") cfg.controller.pic.zeta = value;
  else if (name == "kbar_veh_per_km") cfg.kbar_veh_per_km = value;
  else if (name == "seed") {
    if (!(value >= 0.0) || std::fmod(value, 1.0) != 0.0) throw ConfigError("seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(value);
  } else if (name == "peak_veh_per_h") cfg.demand.peak_veh_per_h = value;
  else if (name == "base_veh_per_h") cfg.demand.base_veh_per_h = value;
  else if (name == "reroute_fraction") cfg.reroute_fraction = value;
  else throw ConfigError("unknown sweep parameter '" + name + "'");
}

std::vector<ParameterSet> cartesian(std::span<const SweepAxis> axes) {
  std::vector<ParameterSet> out;
  if (axes.empty()) return out;
  for (const auto& a : axes) {
    if (a.values.empty()) return out;
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    ParameterSet p;
    for (std::size_t i = 0; i < axes.size(); ++i) p.emplace_back(axes[i].name, axes[i].values[idx[i]]);
    out.push_back(std::move(p));
    std::size_t i = axes.size();
    while (i > 0) {
      --i;
      if (++idx[i] < axes[i].values.size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
  }
}

namespace {

struct RunSummary {
  Metrics metrics;
  std::vector<CycleRecord> cycles;
  std::int64_t violations = 0;
};

/// Runs every task on up to `jobs` threads; results keep task order.
std::vector<RunSummary> run_all(const std::vector<ScenarioConfig>& tasks, int jobs) {
  std::vector<RunSummary> out(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        ScenarioResult r = run_scenario(tasks[i]);
        out[i] = {r.metrics, std::move(r.cycles), r.conservation_violations};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, jobs));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < std::min(n, tasks.size()); ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

std::vector<SweepRow> sweep(const ScenarioConfig& base, std::span<const ParameterSet> points, int jobs) {
  std::vector<ScenarioConfig> tasks;
  std::vector<std::size_t> treated_task;
  std::vector<std::size_t> baseline_task;
  std::map<std::string, std::size_t> baseline_index;
  for (const auto& p : points) {
    ScenarioConfig cfg = base;
    for (const auto& [name, value] : p) apply_parameter(cfg, name, value);
    cfg.validate();
    ScenarioConfig npc = cfg;
    npc.controller = ControllerSpec{};
    npc.kbar_veh_per_km = base.kbar_veh_per_km;
    npc.name = base.name;
    const std::string key = dump_scenario(npc);
    auto [it, inserted] = baseline_index.emplace(key, tasks.size());
    if (inserted) tasks.push_back(std::move(npc));
    baseline_task.push_back(it->second);
    treated_task.push_back(tasks.size());
    tasks.push_back(std::move(cfg));
  }
  const auto runs = run_all(tasks, jobs);

  std::vector<SweepRow> rows;
  rows.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& b = runs[baseline_task[i]];
    const auto& t = runs[treated_task[i]];
    const ScenarioConfig& cfg = tasks[treated_task[i]];
    SweepRow row;
    row.params = points[i];
    row.baseline = b.metrics;
    row.treated = t.metrics;
    row.change = compare(b.metrics, t.metrics);
    row.regulation = regulation_error(t.cycles, cfg.kbar_veh_per_km, cfg.controller.activation);
    row.baseline_regulation = regulation_error(b.cycles, cfg.kbar_veh_per_km, cfg.controller.activation);
    row.conservation_violations = b.violations + t.violations;
    rows.push_back(std::move(row));
  }
  return rows;
}

CalibrationResult calibrate_demand(const ScenarioConfig& base, double kbar_veh_per_km, const CalibrationOptions& options) {
  if (!(kbar_veh_per_km > 0.0)) throw ConfigError("kbar_veh_per_km must be > 0");
  if (!(options.low_ratio < options.high_ratio)) throw ConfigError("calibration ratios are inverted");
  if (!(options.peak_min_veh_per_h < options.peak_max_veh_per_h)) throw ConfigError("calibration peak range is inverted");
  ScenarioConfig cfg = base;
  cfg.controller = ControllerSpec{};
  const double low = options.low_ratio * kbar_veh_per_km;
  const double high = options.high_ratio * kbar_veh_per_km;
  auto peak_density = [&cfg](double peak) {
    cfg.demand.peak_veh_per_h = peak;
    return run_scenario(cfg).peak_density_veh_per_km;
  };

  CalibrationResult r;
  double lo = options.peak_min_veh_per_h;
  double hi = options.peak_max_veh_per_h;
  for (r.iterations = 1; r.iterations <= options.max_iterations; ++r.iterations) {
    const double mid = 0.5 * (lo + hi);
    const double k = peak_density(mid);
    r.peak_veh_per_h = mid;
    r.peak_density_veh_per_km = k;
    if (k < low) lo = mid;
    else if (k > high) hi = mid;
    else {
      r.converged = true;
      return r;
    }
  }
  r.iterations = options.max_iterations;
  return r;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string nfd_csv(const ScenarioResult& r) {
  fmt::memory_buffer b;
  fmt::format_to(std::back_inserter(b), "cycle,k_vehkm,q_vehh\n");
  for (const auto& c : r.cycles) fmt::format_to(std::back_inserter(b), "{},{},{}\n", c.cycle, c.k_veh_per_km, c.q_veh_per_h);
  return fmt::to_string(b);
}

std::string density_csv(const ScenarioResult& r) {
  fmt::memory_buffer b;
  fmt::format_to(std::back_inserter(b), "cycle,t_s,k_vehkm,kbar_vehkm,active\n");
  for (const auto& c : r.cycles) {
    fmt::format_to(std::back_inserter(b), "{},{},{},{},{}\n", c.cycle, c.t_s, c.k_veh_per_km, r.config.kbar_veh_per_km,
                   c.active ? 1 : 0);
  }
  return fmt::to_string(b);
}

std::string controller_csv(const ScenarioResult& r) {
  fmt::memory_buffer b;
  fmt::format_to(std::back_inserter(b), "cycle,k_vehkm,S,LF,u_unclamped_vehkmh,q_in_command_vehh,saturated");
  for (LinkId e : r.entry_links) fmt::format_to(std::back_inserter(b), ",green_s_link{}", e);
  fmt::format_to(std::back_inserter(b), "\n");
  for (const auto& c : r.cycles) {
    fmt::format_to(std::back_inserter(b), "{},{},{},{},{},{},{}", c.cycle, c.k_veh_per_km, c.sliding, c.lyapunov,
                   c.u_unclamped, c.q_in_command_veh_per_h, c.saturated ? 1 : 0);
    for (double g : c.entry_green_s) fmt::format_to(std::back_inserter(b), ",{}", g);
    fmt::format_to(std::back_inserter(b), "\n");
  }
  return fmt::to_string(b);
}

std::string flows_csv(const ScenarioResult& r) {
  fmt::memory_buffer b;
  fmt::format_to(std::back_inserter(b),
                 "cycle,t_s,q_vehh,q_in_vehh,q_out_vehh,q_d_vehh,q_in_command_vehh,green_capacity_vehh,in_network,"
                 "waiting,exited\n");
  for (const auto& c : r.cycles) {
    fmt::format_to(std::back_inserter(b), "{},{},{},{},{},{},{},{},{},{},{}\n", c.cycle, c.t_s, c.q_veh_per_h,
                   c.q_in_veh_per_h, c.q_out_veh_per_h, c.q_d_veh_per_h, c.q_in_command_veh_per_h,
                   c.green_capacity_veh_per_h, c.in_network, c.waiting, c.exited);
  }
  return fmt::to_string(b);
}

std::string links_csv(const ScenarioResult& r) {
  fmt::memory_buffer b;
  fmt::format_to(std::back_inserter(b), "cycle,link,count,inflow,outflow\n");
  for (const auto& l : r.links) {
    fmt::format_to(std::back_inserter(b), "{},{},{},{},{}\n", l.cycle, l.link, l.count, l.inflow, l.outflow);
  }
  return fmt::to_string(b);
}

nlohmann::json metrics_json(const Metrics& m) {
  return {{"vehicles", m.vehicles},
          {"arrived", m.arrived},
          {"unfinished", m.unfinished},
          {"mean_travel_time_s", m.mean_travel_time_s},
          {"mean_delay_s", m.mean_delay_s},
          {"fuel_l_per_veh", m.fuel_l_per_veh},
          {"mean_speed_kmh", m.mean_speed_kmh},
          {"total_distance_km", m.total_distance_km},
          {"total_time_h", m.total_time_h},
          {"no_traffic", m.no_traffic}};
}

}  // namespace

void write_run_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
  write_file_atomic(dir / "nfd.csv", nfd_csv(result));
  write_file_atomic(dir / "density.csv", density_csv(result));
  write_file_atomic(dir / "controller.csv", controller_csv(result));
  write_file_atomic(dir / "flows.csv", flows_csv(result));
  if (result.config.record_links) write_file_atomic(dir / "links.csv", links_csv(result));

  const RegulationError reg =
      regulation_error(result.cycles, result.config.kbar_veh_per_km, result.config.controller.activation);
  int activations = 0;
  int saturated = 0;
  for (const auto& c : result.cycles) {
    if (c.saturated) ++saturated;
  }
  for (std::size_t i = 0; i < result.cycles.size(); ++i) {
    if (result.cycles[i].active && (i == 0 || !result.cycles[i - 1].active)) ++activations;
  }
  nlohmann::json summary = {
      {"config", nlohmann::json::parse(dump_scenario(result.config))},
      {"metrics", metrics_json(result.metrics)},
      {"cycles", result.cycles.size()},
      {"peak_density_veh_per_km", result.peak_density_veh_per_km},
      {"regulation_mean_abs_error_veh_per_km", reg.mean_abs_veh_per_km},
      {"regulation_cycles", reg.cycles},
      {"activations", activations},
      {"saturated_cycles", saturated},
      {"conservation_violations", result.conservation_violations},
  };
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

std::string sweep_table_csv(std::span<const SweepRow> rows) {
  fmt::memory_buffer b;
  if (rows.empty()) return "";
  for (const auto& [name, value] : rows.front().params) fmt::format_to(std::back_inserter(b), "{},", name);
  fmt::format_to(std::back_inserter(b),
                 "npc_tt_s,npc_delay_s,npc_fuel_l,npc_speed_kmh,tt_s,delay_s,fuel_l,speed_kmh,tt_change_pct,"
                 "delay_change_pct,fuel_change_pct,speed_change_pct,regulation_error_vehkm,npc_regulation_error_vehkm\n");
  for (const auto& r : rows) {
    for (const auto& [name, value] : r.params) fmt::format_to(std::back_inserter(b), "{},", value);
    fmt::format_to(std::back_inserter(b), "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.baseline.mean_travel_time_s,
                   r.baseline.mean_delay_s, r.baseline.fuel_l_per_veh, r.baseline.mean_speed_kmh,
                   r.treated.mean_travel_time_s, r.treated.mean_delay_s, r.treated.fuel_l_per_veh,
                   r.treated.mean_speed_kmh, r.change.travel_time_pct, r.change.delay_pct, r.change.fuel_pct,
                   r.change.speed_pct, r.regulation.mean_abs_veh_per_km, r.baseline_regulation.mean_abs_veh_per_km);
  }
  return fmt::to_string(b);
}

}  // namespace perimeter
