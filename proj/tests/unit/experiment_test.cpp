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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "perimeter/config.hpp"
#include "perimeter/errors.hpp"
#include "perimeter/experiment.hpp"

namespace perimeter {
namespace {

namespace fs = std::filesystem;

ScenarioConfig light() {
  ScenarioConfig c;
  c.demand = build_demand("D1", 5.0, 30.0);
  c.horizon_s = 3600.0;
  c.demand.duration_s = 1500.0;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("perimeter_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Vehicle done(double depart, double arrive, double free_flow, double distance) {
  Vehicle v;
  v.departure_s = depart;
  v.arrival_s = arrive;
  v.free_flow_time_s = free_flow;
  v.distance_m = distance;
  v.status = VehicleStatus::kArrived;
  return v;
}

TEST(Metrics, FreeFlowVehicleHasNoDelay) {
  const std::vector<Vehicle> v{done(0.0, 21.6, 21.6, 300.0)};
  const Metrics m = compute_metrics(v, 100.0, FuelModel{});
  EXPECT_DOUBLE_EQ(m.mean_delay_s, 0.0);
  EXPECT_NEAR(m.mean_speed_kmh, 50.0, 1e-9);
}

TEST(Metrics, StopAtSignalIsDelay) {
  const std::vector<Vehicle> v{done(0.0, 51.6, 21.6, 300.0)};
  const Metrics m = compute_metrics(v, 100.0, FuelModel{});
  EXPECT_NEAR(m.mean_delay_s, 30.0, 1e-12);
}

TEST(Metrics, FuelWithoutDelayTermIsDistanceOnly) {
  FuelModel f;
  f.l_per_delay_s = 0.0;
  const std::vector<Vehicle> a{done(0.0, 100.0, 21.6, 300.0)};
  const std::vector<Vehicle> b{done(0.0, 500.0, 43.2, 600.0)};
  EXPECT_NEAR(compute_metrics(a, 1000.0, f).fuel_l_per_veh, 0.024, 1e-15);
  EXPECT_NEAR(compute_metrics(b, 1000.0, f).fuel_l_per_veh, 0.048, 1e-15);
}

TEST(Metrics, UnfinishedTimedToHorizon) {
  Vehicle v;
  v.departure_s = 100.0;
  v.distance_m = 150.0;
  v.free_flow_time_s = 10.8;
  const std::vector<Vehicle> vs{v};
  const Metrics m = compute_metrics(vs, 1000.0, FuelModel{});
  EXPECT_EQ(m.unfinished, 1);
  EXPECT_DOUBLE_EQ(m.mean_travel_time_s, 900.0);
}

TEST(Metrics, Empty) {
  const Metrics m = compute_metrics({}, 100.0, FuelModel{});
  EXPECT_TRUE(m.no_traffic);
  EXPECT_EQ(m.vehicles, 0);
}

TEST(Compare, Examples) {
  Metrics a;
  a.mean_travel_time_s = 100.0;
  a.mean_delay_s = 40.0;
  a.fuel_l_per_veh = 0.2;
  a.mean_speed_kmh = 20.0;
  const Comparison same = compare(a, a);
  EXPECT_EQ(same.travel_time_pct, 0.0);
  EXPECT_EQ(same.delay_pct, 0.0);
  EXPECT_EQ(same.fuel_pct, 0.0);
  EXPECT_EQ(same.speed_pct, 0.0);
  Metrics b = a;
  b.mean_travel_time_s = 88.0;
  EXPECT_NEAR(compare(a, b).travel_time_pct, -12.0, 1e-12);
  Metrics zero;
  const Comparison bad = compare(zero, a);
  EXPECT_TRUE(bad.undefined);
  EXPECT_TRUE(std::isnan(bad.delay_pct));
}

TEST(Scenario, ZeroDemandIsNoTraffic) {
  ScenarioConfig c = light();
  c.demand.base_veh_per_h = 0.0;
  c.demand.peak_veh_per_h = 0.0;
  c.horizon_s = 600.0;
  const ScenarioResult r = run_scenario(c);
  EXPECT_TRUE(r.metrics.no_traffic);
  // Boundaries strictly inside the horizon: 60, 120, ..., 540.
  EXPECT_EQ(r.cycles.size(), 9u);
}

TEST(Scenario, InvariantsOnLightRun) {
  const ScenarioResult r = run_scenario(light());
  EXPECT_EQ(r.conservation_violations, 0);
  EXPECT_FALSE(r.metrics.no_traffic);
  EXPECT_LE(r.metrics.mean_delay_s, r.metrics.mean_travel_time_s);
  const double speed = r.metrics.total_distance_km / r.metrics.total_time_h;
  EXPECT_LE(std::abs(speed - r.metrics.mean_speed_kmh), 1e-6 * speed);
  EXPECT_EQ(r.entry_links.size(), 8u);
}

TEST(Scenario, SameSeedSameResult) {
  ScenarioConfig c = light();
  c.controller.kind = ControllerKind::kSmc;
  c.kbar_veh_per_km = 10.0;
  const ScenarioResult a = run_scenario(c);
  const ScenarioResult b = run_scenario(c);
  ASSERT_EQ(a.cycles.size(), b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) {
    EXPECT_EQ(a.cycles[i].k_veh_per_km, b.cycles[i].k_veh_per_km);
    EXPECT_EQ(a.cycles[i].q_in_command_veh_per_h, b.cycles[i].q_in_command_veh_per_h);
  }
  EXPECT_EQ(a.metrics.mean_delay_s, b.metrics.mean_delay_s);
  c.seed = 2;
  EXPECT_NE(run_scenario(c).metrics.mean_delay_s, a.metrics.mean_delay_s);
}

TEST(Scenario, ControlledRunKeepsCommandsInBounds) {
  ScenarioConfig c = light();
  c.controller.kind = ControllerKind::kSmc;
  c.kbar_veh_per_km = 8.0;
  const ScenarioResult r = run_scenario(c);
  int active = 0;
  for (const auto& cy : r.cycles) {
    if (!cy.active) continue;
    ++active;
    EXPECT_GE(cy.q_in_command_veh_per_h, 480.0);
    EXPECT_LE(cy.q_in_command_veh_per_h, 12960.0);
    EXPECT_EQ(cy.entry_green_s.size(), 8u);
  }
  EXPECT_GT(active, 0);
}

TEST(Scenario, ValidationRejectsBadHorizon) {
  ScenarioConfig c = light();
  c.horizon_s = -1.0;
  EXPECT_THROW(run_scenario(c), ConfigError);
}

TEST(Regulation, SameWindowRule) {
  std::vector<CycleRecord> cycles;
  for (double k : {10.0, 20.0, 41.0, 50.0, 46.0, 30.0, 30.0, 30.0, 30.0, 30.0, 10.0}) {
    CycleRecord c;
    c.k_veh_per_km = k;
    cycles.push_back(c);
  }
  const RegulationError r = regulation_error(cycles, 48.0);
  // Active from 41 through the fifth cycle below threshold.
  EXPECT_EQ(r.cycles, 7);
  EXPECT_NEAR(r.mean_abs_veh_per_km, (7.0 + 2.0 + 2.0 + 18.0 * 4.0) / 7.0, 1e-12);
}

TEST(Sweep, CartesianOrder) {
  const std::vector<SweepAxis> axes{{"a", {1.0, 2.0}}, {"b", {3.0, 4.0, 5.0}}};
  const auto pts = cartesian(axes);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[1][0].second, 1.0);
  EXPECT_EQ(pts[1][1].second, 4.0);
  EXPECT_EQ(pts[3][0].second, 2.0);
  EXPECT_TRUE(cartesian({}).empty());
  const std::vector<SweepAxis> hole{{"a", {}}};
  EXPECT_TRUE(cartesian(hole).empty());
}

TEST(Sweep, EmptyGridEmptyTable) {
  EXPECT_TRUE(sweep(light(), {}, 2).empty());
}

TEST(Sweep, JobsDoNotChangeRows) {
  ScenarioConfig c = light();
  c.controller.kind = ControllerKind::kSmc;
  c.kbar_veh_per_km = 8.0;
  const std::vector<SweepAxis> axes{{"eta", {2.0, 200.0}}, {"seed", {1.0, 2.0}}};
  const auto pts = cartesian(axes);
  const auto one = sweep(c, pts, 1);
  const auto many = sweep(c, pts, 3);
  EXPECT_EQ(sweep_table_csv(one), sweep_table_csv(many));
  ASSERT_EQ(one.size(), 4u);
  // Rows 0 and 2 share a seed and therefore a baseline.
  EXPECT_EQ(one[0].baseline.mean_delay_s, one[2].baseline.mean_delay_s);
}

TEST(Sweep, UnknownParameter) {
  ScenarioConfig c = light();
  EXPECT_THROW(apply_parameter(c, "gamma", 1.0), ConfigError);
  EXPECT_THROW(apply_parameter(c, "seed", 1.5), ConfigError);
}

TEST(Outputs, FilesAndNfdRoundTrip) {
  ScenarioConfig c = light();
  c.record_links = true;
  const ScenarioResult r = run_scenario(c);
  const fs::path dir = scratch("outputs");
  write_run_outputs(r, dir);
  for (const char* f : {"nfd.csv", "density.csv", "controller.csv", "flows.csv", "links.csv", "summary.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");
  const auto scatter = parse_nfd_csv(slurp(dir / "nfd.csv"));
  ASSERT_EQ(scatter.size(), r.cycles.size());
  for (std::size_t i = 0; i < scatter.size(); ++i) {
    EXPECT_NEAR(scatter[i].density_veh_per_km, r.cycles[i].k_veh_per_km, 1e-6);
  }
  fs::remove_all(dir);
}

TEST(Outputs, AtomicWriteReplaces) {
  const fs::path dir = scratch("atomic");
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  EXPECT_EQ(slurp(dir / "a.txt"), "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
  EXPECT_EQ(n, 1u);
  fs::remove_all(dir);
}

TEST(Outputs, NfdCsvErrors) {
  EXPECT_THROW(parse_nfd_csv("k,q\n1,2\n"), InputError);
  EXPECT_THROW(parse_nfd_csv("cycle,k_vehkm,q_vehh\n1;2;3\n"), InputError);
  EXPECT_TRUE(parse_nfd_csv("cycle,k_vehkm,q_vehh\n").empty());
}

TEST(OdPattern, StringRoundTrip) {
  for (auto od : {OdPattern::kOppositeSides, OdPattern::kThroughRegion, OdPattern::kAllPairs}) {
    EXPECT_EQ(od_pattern_from_string(to_string(od)), od);
  }
  EXPECT_THROW(od_pattern_from_string("diagonal"), ConfigError);
}

}  // namespace
}  // namespace perimeter
