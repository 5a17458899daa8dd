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

#include "perimeter/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "perimeter/errors.hpp"

namespace perimeter {

using nlohmann::json;

namespace {

/// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && it->template get<std::int64_t>() < 0) throw ConfigError("");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, where(key));
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + where(key));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

std::string shape_name(DemandShape s) {
  switch (s) {
    case DemandShape::kTriangular: return "triangular";
    case DemandShape::kDome: return "dome";
    case DemandShape::kSinusoidal: return "sinusoidal";
    case DemandShape::kTable: return "table";
  }
  return "triangular";
}

DemandShape shape_from(const std::string& s) {
  if (s == "triangular") return DemandShape::kTriangular;
  if (s == "dome") return DemandShape::kDome;
  if (s == "sinusoidal") return DemandShape::kSinusoidal;
  if (s == "table") return DemandShape::kTable;
  throw ConfigError("unknown demand.shape '" + s + "'");
}

std::string mode_name(DemandMode m) { return m == DemandMode::kPoisson ? "poisson" : "deterministic"; }

DemandMode mode_from(const std::string& s) {
  if (s == "poisson") return DemandMode::kPoisson;
  if (s == "deterministic") return DemandMode::kDeterministic;
  throw ConfigError("unknown demand.mode '" + s + "'");
}

std::string kind_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::kNone: return "none";
    case ControllerKind::kSmc: return "smc";
    case ControllerKind::kPic: return "pic";
  }
  return "none";
}

ControllerKind kind_from(const std::string& s) {
  if (s == "none" || s == "npc") return ControllerKind::kNone;
  if (s == "smc") return ControllerKind::kSmc;
  if (s == "pic") return ControllerKind::kPic;
  throw ConfigError("unknown controller.kind '" + s + "'");
}

std::string switching_name(SwitchingKind k) {
  switch (k) {
    case SwitchingKind::kSign: return "sign";
    case SwitchingKind::kSaturation: return "saturation";
    case SwitchingKind::kTanh: return "tanh";
  }
  return "sign";
}

SwitchingKind switching_from(const std::string& s) {
  if (s == "sign") return SwitchingKind::kSign;
  if (s == "saturation") return SwitchingKind::kSaturation;
  if (s == "tanh") return SwitchingKind::kTanh;
  throw ConfigError("unknown controller.smc.switching '" + s + "'");
}

void read_scenario(Section& root, ScenarioConfig& c) {
  root.get("name", c.name);
  root.get("seed", c.seed);
  root.get("horizon_s", c.horizon_s);
  root.get("record_links", c.record_links);
  if (auto net = root.sub("network")) {
    net->get("rows", c.grid.rows);
    net->get("cols", c.grid.cols);
    net->get("segments_per_block", c.grid.segments_per_block);
    if (auto l = net->sub("link")) {
      l->get("length_m", c.grid.link.length_m);
      l->get("lanes", c.grid.link.lanes);
      l->get("jam_density_veh_per_km_lane", c.grid.link.jam_density_veh_per_km_lane);
      l->get("free_flow_speed_kmh", c.grid.link.free_flow_speed_kmh);
      l->get("speed_at_capacity_kmh", c.grid.link.speed_at_capacity_kmh);
      l->get("saturation_flow_veh_per_h_lane", c.grid.link.saturation_flow_veh_per_h_lane);
      l->finish();
    }
    net->finish();
  }
  if (auto r = root.sub("region")) {
    r->get("row_min", c.region.row_min);
    r->get("row_max", c.region.row_max);
    r->get("col_min", c.region.col_min);
    r->get("col_max", c.region.col_max);
    r->finish();
  }
  if (auto s = root.sub("signals")) {
    s->get("cycle_s", c.timing.cycle_s);
    s->get("lost_time_s_per_phase", c.timing.lost_time_s_per_phase);
    s->get("min_green_s", c.timing.min_green_s);
    s->get("webster_period_s", c.webster_period_s);
    s->finish();
  }
  if (auto p = root.sub("plant")) {
    p->get("source_flow_veh_per_h", c.plant.source_flow_veh_per_h);
    p->get("supply_limit", c.plant.supply_limit);
    p->get("reroute_period_s", c.reroute_period_s);
    p->get("reroute_fraction", c.reroute_fraction);
    p->finish();
  }
  if (auto d = root.sub("demand")) {
    std::string shape = shape_name(c.demand.shape);
    std::string mode = mode_name(c.demand_mode);
    std::string od = to_string(c.od);
    d->get("name", c.demand.name);
    d->get("shape", shape);
    d->get("mode", mode);
    d->get("od_pattern", od);
    d->get("period_s", c.demand.period_s);
    d->get("duration_s", c.demand.duration_s);
    d->get("base_veh_per_h", c.demand.base_veh_per_h);
    d->get("peak_veh_per_h", c.demand.peak_veh_per_h);
    d->get("wave_period_s", c.demand.wave_period_s);
    d->get("table_veh_per_h", c.demand.table_veh_per_h);
    c.demand.shape = shape_from(shape);
    c.demand_mode = mode_from(mode);
    c.od = od_pattern_from_string(od);
    d->finish();
  }
  if (auto k = root.sub("controller")) {
    std::string kind = kind_name(c.controller.kind);
    double ratio = c.controller.activation.ratio;
    CommandBounds bounds = c.controller.smc.bounds;
    k->get("kind", kind);
    k->get("kbar_veh_per_km", c.kbar_veh_per_km);
    k->get("activation_ratio", ratio);
    k->get("hold_down_cycles", c.controller.activation.hold_down_cycles);
    k->get("u_min_veh_per_h", bounds.u_min_veh_per_h);
    k->get("u_max_veh_per_h", bounds.u_max_veh_per_h);
    if (auto s = k->sub("smc")) {
      std::string sw = switching_name(c.controller.smc.switching);
      s->get("lambda_per_h", c.controller.smc.lambda_per_h);
      s->get("eta_veh_per_km_h", c.controller.smc.eta);
      s->get("alpha_veh_per_km_h", c.controller.smc.alpha);
      s->get("beta_veh_per_km_h", c.controller.smc.beta);
      s->get("switching", sw);
      s->get("boundary_width_veh_per_km", c.controller.smc.boundary_width);
      c.controller.smc.switching = switching_from(sw);
      s->finish();
    }
    if (auto p = k->sub("pic")) {
      p->get("mu", c.controller.pic.mu);
      p->get("zeta_veh_per_km_per_veh_per_h", c.controller.pic.zeta);
      p->finish();
    }
    c.controller.kind = kind_from(kind);
    c.controller.activation.ratio = ratio;
    c.controller.smc.activation_ratio = ratio;
    c.controller.pic.activation_ratio = ratio;
    c.controller.smc.bounds = bounds;
    c.controller.pic.bounds = bounds;
    c.controller.pic.kbar = c.kbar_veh_per_km;
    k->finish();
  }
  if (auto f = root.sub("fuel")) {
    f->get("l_per_km", c.fuel.l_per_km);
    f->get("l_per_delay_s", c.fuel.l_per_delay_s);
    f->finish();
  }
}

json scenario_json(const ScenarioConfig& c) {
  const auto& l = c.grid.link;
  const auto& smc = c.controller.smc;
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"horizon_s", c.horizon_s},
      {"record_links", c.record_links},
      {"network",
       {{"rows", c.grid.rows},
        {"cols", c.grid.cols},
        {"segments_per_block", c.grid.segments_per_block},
        {"link",
         {{"length_m", l.length_m},
          {"lanes", l.lanes},
          {"jam_density_veh_per_km_lane", l.jam_density_veh_per_km_lane},
          {"free_flow_speed_kmh", l.free_flow_speed_kmh},
          {"speed_at_capacity_kmh", l.speed_at_capacity_kmh},
          {"saturation_flow_veh_per_h_lane", l.saturation_flow_veh_per_h_lane}}}}},
      {"region",
       {{"row_min", c.region.row_min},
        {"row_max", c.region.row_max},
        {"col_min", c.region.col_min},
        {"col_max", c.region.col_max}}},
      {"signals",
       {{"cycle_s", c.timing.cycle_s},
        {"lost_time_s_per_phase", c.timing.lost_time_s_per_phase},
        {"min_green_s", c.timing.min_green_s},
        {"webster_period_s", c.webster_period_s}}},
      {"plant",
       {{"source_flow_veh_per_h", c.plant.source_flow_veh_per_h},
        {"supply_limit", c.plant.supply_limit},
        {"reroute_period_s", c.reroute_period_s},
        {"reroute_fraction", c.reroute_fraction}}},
      {"demand",
       {{"name", c.demand.name},
        {"shape", shape_name(c.demand.shape)},
        {"mode", mode_name(c.demand_mode)},
        {"od_pattern", to_string(c.od)},
        {"period_s", c.demand.period_s},
        {"duration_s", c.demand.duration_s},
        {"base_veh_per_h", c.demand.base_veh_per_h},
        {"peak_veh_per_h", c.demand.peak_veh_per_h},
        {"wave_period_s", c.demand.wave_period_s},
        {"table_veh_per_h", c.demand.table_veh_per_h}}},
      {"controller",
       {{"kind", kind_name(c.controller.kind)},
        {"kbar_veh_per_km", c.kbar_veh_per_km},
        {"activation_ratio", c.controller.activation.ratio},
        {"hold_down_cycles", c.controller.activation.hold_down_cycles},
        {"u_min_veh_per_h", smc.bounds.u_min_veh_per_h},
        {"u_max_veh_per_h", smc.bounds.u_max_veh_per_h},
        {"smc",
         {{"lambda_per_h", smc.lambda_per_h},
          {"eta_veh_per_km_h", smc.eta},
          {"alpha_veh_per_km_h", smc.alpha},
          {"beta_veh_per_km_h", smc.beta},
          {"switching", switching_name(smc.switching)},
          {"boundary_width_veh_per_km", smc.boundary_width}}},
        {"pic", {{"mu", c.controller.pic.mu}, {"zeta_veh_per_km_per_veh_per_h", c.controller.pic.zeta}}}}},
      {"fuel", {{"l_per_km", c.fuel.l_per_km}, {"l_per_delay_s", c.fuel.l_per_delay_s}}},
  };
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  const json j = parse_json(json_text);
  ScenarioConfig c;
  Section root(j, "");
  read_scenario(root, c);
  root.finish();
  c.validate();
  return c;
}

std::string dump_scenario(const ScenarioConfig& cfg) { return scenario_json(cfg).dump(2); }

RunConfig parse_run_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  RunConfig rc;
  Section root(j, "");
  read_scenario(root, rc.scenario);
  root.get("seeds", rc.seeds);
  std::string sp;
  root.get("setpoint_file", sp);
  if (!sp.empty()) rc.setpoint_file = sp;
  root.finish();
  rc.scenario.validate();
  return rc;
}

std::string dump_run_config(const RunConfig& cfg) {
  json j = scenario_json(cfg.scenario);
  j["seeds"] = cfg.seeds;
  if (cfg.setpoint_file) j["setpoint_file"] = *cfg.setpoint_file;
  return j.dump(2);
}

SweepConfig parse_sweep_config(const std::string& json_text) {
  const json j = parse_json(json_text);
  SweepConfig sc;
  Section root(j, "");
  if (auto base = root.sub("base")) {
    read_scenario(*base, sc.base);
    base->finish();
  }
  root.get("jobs", sc.jobs);
  if (sc.jobs < 1) throw ConfigError("jobs must be >= 1");
  const json* grid = root.raw("grid");
  const json* points = root.raw("points");
  if (grid && points) throw ConfigError("sweep takes either grid or points, not both");
  if (grid) {
    if (!grid->is_object()) throw ConfigError("grid must be an object");
    std::vector<SweepAxis> axes;
    for (const auto& [name, values] : grid->items()) {
      if (!values.is_array()) throw ConfigError("grid." + name + " must be a list");
      SweepAxis axis{name, {}};
      for (const auto& v : values) {
        if (!v.is_number()) throw ConfigError("grid." + name + " must hold numbers");
        axis.values.push_back(v.get<double>());
      }
      axes.push_back(std::move(axis));
    }
    sc.points = cartesian(axes);
  }
  if (points) {
    if (!points->is_array()) throw ConfigError("points must be a list");
    for (const auto& p : *points) {
      if (!p.is_object()) throw ConfigError("each point must be an object");
      ParameterSet set;
      for (const auto& [name, v] : p.items()) {
        if (!v.is_number()) throw ConfigError("point value " + name + " must be a number");
        set.emplace_back(name, v.get<double>());
      }
      sc.points.push_back(std::move(set));
    }
  }
  root.finish();
  sc.base.validate();
  // Surface unknown parameter names before any simulation runs.
  for (const auto& p : sc.points) {
    ScenarioConfig probe = sc.base;
    for (const auto& [name, value] : p) apply_parameter(probe, name, value);
  }
  return sc;
}

SetPoint parse_setpoint(const std::string& json_text) {
  const json j = parse_json(json_text);
  SetPoint sp;
  Section root(j, "");
  root.get("kbar_veh_per_km", sp.kbar_veh_per_km);
  root.get("q_max_veh_per_h", sp.q_max_veh_per_h);
  root.get("bin_width_veh_per_km", sp.bin_width_veh_per_km);
  root.get("no_congested_branch", sp.no_congested_branch);
  root.finish();
  if (!(sp.kbar_veh_per_km > 0.0)) throw ConfigError("kbar_veh_per_km must be > 0");
  return sp;
}

std::string dump_setpoint(const SetPoint& sp) {
  const json j = {{"kbar_veh_per_km", sp.kbar_veh_per_km},
                  {"q_max_veh_per_h", sp.q_max_veh_per_h},
                  {"bin_width_veh_per_km", sp.bin_width_veh_per_km},
                  {"no_congested_branch", sp.no_congested_branch}};
  return j.dump(2);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace perimeter
