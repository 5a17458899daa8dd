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

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "perimeter/control.hpp"
#include "perimeter/errors.hpp"

namespace perimeter {
namespace {

SmcState active_smc() {
  SmcState s;
  s.active = true;
  return s;
}

TEST(Switching, Examples) {
  EXPECT_DOUBLE_EQ(switching(0.0, SwitchingKind::kSign, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(switching(-3.0, SwitchingKind::kSign, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(switching(0.5, SwitchingKind::kSaturation, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(switching(7.0, SwitchingKind::kSaturation, 1.0), 1.0);
}

TEST(Switching, OddBoundedMonotone) {
  for (auto kind : {SwitchingKind::kSign, SwitchingKind::kSaturation, SwitchingKind::kTanh}) {
    double prev = -2.0;
    for (int i = -400; i <= 400; ++i) {
      const double s = i * 0.05;
      const double v = switching(s, kind, 2.0);
      EXPECT_LE(std::abs(v), 1.0);
      EXPECT_DOUBLE_EQ(switching(-s, kind, 2.0), -v);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Switching, SaturationTendsToSign) {
  for (double s : {-3.0, -0.2, 0.01, 0.7, 5.0}) {
    EXPECT_DOUBLE_EQ(switching(s, SwitchingKind::kSaturation, 1e-6), switching(s, SwitchingKind::kSign, 1.0));
  }
}

TEST(Sliding, Examples) {
  EXPECT_DOUBLE_EQ(sliding_value(48.0, 0.0, 15.0, 48.0), 0.0);
  EXPECT_DOUBLE_EQ(sliding_value(50.0, 0.0, 15.0, 48.0), 2.0);
  EXPECT_NEAR(sliding_value(50.0, -2.0 / 15.0, 15.0, 48.0), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(lyapunov_value(0.0), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(2.0), 2.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(-2.0), 2.0);
}

TEST(ReachingBound, Examples) {
  EXPECT_DOUBLE_EQ(reaching_time_bound_h(0.0, 200.0), 0.0);
  EXPECT_NEAR(activation_reaching_bound_h(48.0, 200.0), 0.036, 1e-15);
  EXPECT_NEAR(activation_reaching_bound_h(48.0, 400.0), 0.018, 1e-15);
  EXPECT_THROW(reaching_time_bound_h(1.0, 0.0), InputError);
}

TEST(Smc, EquilibriumHoldsOutflow) {
  SmcConfig cfg;
  const SmcStep st = smc_command(cfg, active_smc(), {48.0, 3600.0, 0.0, 48.0, 7200.0, 60.0});
  EXPECT_DOUBLE_EQ(st.u_unclamped * 7.2, 3600.0);
  EXPECT_DOUBLE_EQ(st.q_in_command, 3600.0);
  EXPECT_FALSE(st.saturated);
}

TEST(Smc, HandEvaluatedExample) {
  // q_out / L = 500, e = 10, x = 10 / 60 (current sample included):
  // u = 500 - 150 - 200 - 2.5 = 147.5 veh/km/h -> 1062 veh/h.
  SmcConfig cfg;
  const SmcStep st = smc_command(cfg, active_smc(), {58.0, 3600.0, 0.0, 48.0, 7200.0, 60.0});
  EXPECT_NEAR(st.u_unclamped, 147.5, 1e-12);
  EXPECT_NEAR(st.q_in_command, 1062.0, 1e-9);
  EXPECT_NEAR(st.state.integral_x, 10.0 / 60.0, 1e-15);
  EXPECT_NEAR(st.sliding, 12.5, 1e-12);
}

TEST(Smc, SaturatesAndFreezesIntegral) {
  SmcConfig cfg;
  SmcState s = active_smc();
  s.integral_x = 0.25;
  const SmcStep hi = smc_command(cfg, s, {20.0, 20000.0, 0.0, 48.0, 7200.0, 60.0});
  EXPECT_DOUBLE_EQ(hi.q_in_command, 12960.0);
  EXPECT_TRUE(hi.saturated);
  EXPECT_DOUBLE_EQ(hi.state.integral_x, 0.25);
  const SmcStep lo = smc_command(cfg, s, {80.0, 500.0, 0.0, 48.0, 7200.0, 60.0});
  EXPECT_DOUBLE_EQ(lo.q_in_command, 480.0);
  EXPECT_TRUE(lo.saturated);
}

TEST(Smc, GammaIsSumOfBounds) {
  SmcConfig cfg;
  cfg.alpha = 30.0;
  cfg.beta = 7.0;
  cfg.eta = 11.0;
  EXPECT_EQ(cfg.gamma(), 48.0);
  SmcConfig swapped = cfg;
  std::swap(swapped.alpha, swapped.beta);
  const SmcMeasurement m{55.0, 4000.0, 100.0, 48.0, 7200.0, 60.0};
  EXPECT_EQ(smc_command(cfg, active_smc(), m).q_in_command, smc_command(swapped, active_smc(), m).q_in_command);
}

TEST(Smc, InactiveIsAContractViolation) {
  EXPECT_THROW(smc_command(SmcConfig{}, SmcState{}, {48.0, 0.0, 0.0, 48.0, 7200.0, 60.0}), ContractViolation);
}

TEST(Smc, ConfigValidation) {
  SmcConfig cfg;
  cfg.lambda_per_h = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.bounds.u_min_veh_per_h = 20000.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.switching = SwitchingKind::kTanh;
  cfg.boundary_width = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Smc, MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto kinds = std::array{SwitchingKind::kSign, SwitchingKind::kSaturation, SwitchingKind::kTanh};
    const auto okinds = std::array{oracle::Switch::kSign, oracle::Switch::kSat, oracle::Switch::kTanh};
    const int kind = i % 3;
    SmcConfig cfg;
    cfg.lambda_per_h = 1.0 + 200.0 * u01(rng);
    cfg.eta = 1.0 + 300.0 * u01(rng);
    cfg.alpha = 100.0 * u01(rng);
    cfg.beta = 100.0 * u01(rng);
    cfg.switching = kinds[static_cast<std::size_t>(kind)];
    cfg.boundary_width = 0.5 + 5.0 * u01(rng);
    SmcState s = active_smc();
    s.integral_x = 0.4 * (u01(rng) - 0.5);
    const SmcMeasurement m{160.0 * u01(rng), 15000.0 * u01(rng), 2000.0 * u01(rng), 20.0 + 60.0 * u01(rng),
                           1000.0 + 10000.0 * u01(rng), 30.0 + 90.0 * u01(rng)};
    const SmcStep got = smc_command(cfg, s, m);
    const oracle::SmcOut want = oracle::smc({cfg.lambda_per_h, cfg.eta, cfg.alpha, cfg.beta, cfg.boundary_width,
                                             okinds[static_cast<std::size_t>(kind)], s.integral_x, m.k, m.kbar,
                                             m.q_out_veh_per_h, m.q_d_veh_per_h, m.region_length_m, m.dt_s, 480.0,
                                             12960.0});
    ASSERT_LE(oracle::rel_err(got.u_unclamped * m.region_length_m / 1000.0, want.q_raw), 1e-9) << i;
    ASSERT_LE(oracle::rel_err(got.q_in_command, want.q), 1e-9) << i;
    ASSERT_LE(oracle::rel_err(got.state.integral_x, want.x_next), 1e-9) << i;
    ASSERT_LE(oracle::rel_err(got.sliding, want.s), 1e-9) << i;
  }
}

TEST(Bounds, ClampIdempotent) {
  const CommandBounds b;
  for (double q : {-100.0, 0.0, 480.0, 5000.0, 12960.0, 1e6}) {
    const double c = b.clamp(q);
    EXPECT_EQ(b.clamp(c), c);
    EXPECT_GE(c, 480.0);
    EXPECT_LE(c, 12960.0);
  }
}

PicState active_pic(double prev) {
  PicState s;
  s.active = true;
  s.prev_q_in = prev;
  return s;
}

TEST(Pic, HandEvaluatedExample) {
  // Kp = mu / zeta = 100 and Ki = (1 - mu) / zeta = 50.
  PicConfig cfg;
  cfg.mu = 2.0 / 3.0;
  cfg.zeta = 1.0 / 150.0;
  cfg.kbar = 48.0;
  EXPECT_NEAR(cfg.kp(), 100.0, 1e-12);
  EXPECT_NEAR(cfg.ki(), 50.0, 1e-12);
  EXPECT_NEAR(pic_command(cfg, active_pic(3000.0), 50.0, 49.0).q_in_command, 2800.0, 1e-9);
}

TEST(Pic, UnchangedAtSetPoint) {
  PicConfig cfg;
  EXPECT_DOUBLE_EQ(pic_command(cfg, active_pic(3210.0), 48.0, 48.0).q_in_command, 3210.0);
}

TEST(Pic, ClampsLow) {
  PicConfig cfg;
  const PicStep st = pic_command(cfg, active_pic(600.0), 70.0, 60.0);
  EXPECT_DOUBLE_EQ(st.q_in_command, 480.0);
  EXPECT_TRUE(st.saturated);
  EXPECT_DOUBLE_EQ(st.state.prev_q_in, 480.0);
}

TEST(Pic, PaperGainsFromMuZeta) {
  PicConfig cfg;
  EXPECT_NEAR(cfg.kp(), 423.5, 1e-9);
  EXPECT_NEAR(cfg.ki(), 76.5, 1e-9);
}

TEST(Pic, MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    PicConfig cfg;
    cfg.mu = 0.05 + 0.9 * u01(rng);
    cfg.zeta = 0.0005 + 0.01 * u01(rng);
    cfg.kbar = 20.0 + 60.0 * u01(rng);
    const double prev = 13000.0 * u01(rng);
    const double k_now = 120.0 * u01(rng);
    const double k_prev = 120.0 * u01(rng);
    const double got = pic_command(cfg, active_pic(prev), k_now, k_prev).q_in_command;
    const double want = oracle::pic(cfg.mu, cfg.zeta, prev, k_now, k_prev, cfg.kbar, 480.0, 12960.0);
    ASSERT_LE(oracle::rel_err(got, want), 1e-9) << i;
  }
}

std::vector<PicSample> synthesize(double mu, double zeta, double kbar, double qbar, int n, double noise,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> q(qbar - 1500.0, qbar + 1500.0);
  std::normal_distribution<double> eps(0.0, noise);
  std::vector<PicSample> s;
  double k = kbar + 5.0;
  for (int i = 0; i < n; ++i) {
    const double qi = q(rng);
    s.push_back({k, qi});
    k = kbar + mu * (k - kbar) + zeta * (qi - qbar) + eps(rng);
  }
  return s;
}

TEST(PicTune, NoiselessRecovery) {
  const auto s = synthesize(0.847, 0.002, 48.0, 4000.0, 60, 0.0, 1);
  const PicTuning t = pic_tune(s, 48.0, 4000.0);
  EXPECT_LE(std::abs(t.mu - 0.847) / 0.847, 1e-9);
  EXPECT_LE(std::abs(t.zeta - 0.002) / 0.002, 1e-9);
  EXPECT_FALSE(t.suspicious);
  EXPECT_LT(t.residual_rms, 1e-9);
}

TEST(PicTune, NoisyRecovery) {
  const auto clean = synthesize(0.847, 0.002, 48.0, 4000.0, 400, 0.0, 2);
  double lo = clean.front().k, hi = lo;
  for (const auto& p : clean) {
    lo = std::min(lo, p.k);
    hi = std::max(hi, p.k);
  }
  const auto s = synthesize(0.847, 0.002, 48.0, 4000.0, 400, 0.01 * (hi - lo), 2);
  const PicTuning t = pic_tune(s, 48.0, 4000.0);
  EXPECT_LE(std::abs(t.mu - 0.847) / 0.847, 0.05);
  EXPECT_LE(std::abs(t.zeta - 0.002) / 0.002, 0.05);
}

TEST(PicTune, RankDeficient) {
  const std::vector<PicSample> flat(10, PicSample{50.0, 3000.0});
  EXPECT_THROW(pic_tune(flat, 48.0, 3000.0), NumericError);
  std::vector<PicSample> collinear;
  for (int i = 0; i < 10; ++i) collinear.push_back({48.0 + i, 3000.0 + 100.0 * i});
  EXPECT_THROW(pic_tune(collinear, 48.0, 3000.0), NumericError);
  const std::vector<PicSample> two(2, PicSample{50.0, 3000.0});
  EXPECT_THROW(pic_tune(two, 48.0, 3000.0), InputError);
}

TEST(Activation, Threshold) {
  EXPECT_EQ(activation_check(false, 0, 0.84 * 48.0, 48.0, 0.85, 5), ActivationEvent::kNone);
  EXPECT_EQ(activation_check(false, 0, 0.85 * 48.0, 48.0, 0.85, 5), ActivationEvent::kActivated);
}

TEST(Activation, HoldDownPreventsFlapping) {
  ActivationTracker t;
  EXPECT_EQ(t.update(45.0, 48.0), ActivationEvent::kActivated);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(t.update(30.0, 48.0), ActivationEvent::kNone);
    EXPECT_TRUE(t.active());
  }
  // A single cycle back above the threshold resets the count.
  EXPECT_EQ(t.update(45.0, 48.0), ActivationEvent::kNone);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(t.update(30.0, 48.0), ActivationEvent::kNone);
  EXPECT_EQ(t.update(30.0, 48.0), ActivationEvent::kDeactivated);
  EXPECT_FALSE(t.active());
}

TEST(Activation, Validation) {
  EXPECT_THROW(ActivationTracker({0.0, 5}), ConfigError);
  EXPECT_THROW(ActivationTracker({0.85, 0}), ConfigError);
}

TEST(GreenAllocation, SingleLinkHalfSaturation) {
  const std::vector<EntryApproach> e{{0, 1800.0, 100.0}};
  const GreenAllocation g = green_allocation(900.0, e, SignalTiming{});
  EXPECT_DOUBLE_EQ(g.green_s[0], 30.0);
  EXPECT_FALSE(g.clamped);
}

TEST(GreenAllocation, EightEqualLinks) {
  const std::vector<EntryApproach> e(8, EntryApproach{0, 1800.0, 250.0});
  const GreenAllocation g = green_allocation(4800.0, e, SignalTiming{});
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_DOUBLE_EQ(g.flow_veh_per_h[i], 600.0);
    EXPECT_DOUBLE_EQ(g.green_s[i], 20.0);
  }
  EXPECT_DOUBLE_EQ(g.implied_flow_veh_per_h, 4800.0);
}

TEST(GreenAllocation, MinimumCommandOverDelivers) {
  const std::vector<EntryApproach> e(8, EntryApproach{0, 1800.0, 250.0});
  const GreenAllocation g = green_allocation(480.0, e, SignalTiming{});
  for (double s : g.green_s) EXPECT_DOUBLE_EQ(s, 5.0);
  EXPECT_TRUE(g.clamped);
  EXPECT_GE(g.implied_flow_veh_per_h, 480.0);
}

TEST(GreenAllocation, ZeroDemandSplitsEqually) {
  const std::vector<EntryApproach> e(4, EntryApproach{0, 1800.0, 0.0});
  const GreenAllocation g = green_allocation(2400.0, e, SignalTiming{});
  for (double s : g.green_s) EXPECT_DOUBLE_EQ(s, 20.0);
}

TEST(GreenAllocation, MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<EntryApproach> e;
    std::vector<oracle::Approach> o;
    const int n = count(rng);
    for (int j = 0; j < n; ++j) {
      const double sat = 1200.0 + 2400.0 * u01(rng);
      const double dem = u01(rng) < 0.1 ? 0.0 : 1500.0 * u01(rng);
      e.push_back({j, sat, dem});
      o.push_back({sat, dem});
    }
    const double cmd = 13000.0 * u01(rng);
    const GreenAllocation got = green_allocation(cmd, e, SignalTiming{});
    const auto want = oracle::greens(cmd, o, 60.0, 4.0, 5.0);
    for (std::size_t j = 0; j < want.size(); ++j) ASSERT_LE(oracle::rel_err(got.green_s[j], want[j]), 1e-9);
  }
}

TEST(Controller, PicStartsFromMeasuredInflow) {
  ControllerSpec spec;
  spec.kind = ControllerKind::kPic;
  PerimeterController c(spec, 48.0, 7200.0, 60.0);
  EXPECT_FALSE(c.update({40.5, 3000.0, 3000.0, 0.0}).active);
  const ControlDecision d = c.update({41.0, 3500.0, 3000.0, 0.0});
  EXPECT_EQ(d.event, ActivationEvent::kActivated);
  // 3500 - Kp (41 - 40.5) + Ki (48 - 41).
  EXPECT_NEAR(d.q_in_command, 3500.0 - 423.5 * 0.5 + 76.5 * 7.0, 1e-9);
}

TEST(Controller, NoneNeverActivates) {
  PerimeterController c(ControllerSpec{}, 48.0, 7200.0, 60.0);
  for (int i = 0; i < 10; ++i) EXPECT_FALSE(c.update({90.0, 1000.0, 1000.0, 0.0}).active);
}

TEST(Controller, SmcIntegralResetsOnReactivation) {
  ControllerSpec spec;
  spec.kind = ControllerKind::kSmc;
  spec.activation.hold_down_cycles = 1;
  PerimeterController c(spec, 48.0, 7200.0, 60.0);
  c.update({50.0, 4000.0, 4000.0, 0.0});
  EXPECT_GT(c.smc_state().integral_x, 0.0);
  c.update({10.0, 4000.0, 4000.0, 0.0});
  EXPECT_FALSE(c.smc_state().active);
  c.update({48.0, 4000.0, 4000.0, 0.0});
  EXPECT_DOUBLE_EQ(c.smc_state().integral_x, 0.0);
}

}  // namespace
}  // namespace perimeter
