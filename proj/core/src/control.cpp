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

#include "perimeter/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perimeter/errors.hpp"

namespace perimeter {

double switching(double s, SwitchingKind kind, double boundary_width) {
  switch (kind) {
    case SwitchingKind::kSign:
      return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    case SwitchingKind::kSaturation:
      return std::clamp(s / boundary_width, -1.0, 1.0);
    case SwitchingKind::kTanh:
      return std::tanh(s / boundary_width);
  }
  return 0.0;
}

double sliding_value(double k, double integral_x, double lambda_per_h, double kbar) {
  return (k - kbar) + lambda_per_h * integral_x;
}

double lyapunov_value(double s) { return 0.5 * s * s; }

double reaching_time_bound_h(double s0, double eta) {
  if (!(eta > 0.0)) throw InputError("eta must be > 0");
  return std::abs(s0) / eta;
}

double activation_reaching_bound_h(double kbar, double eta, double activation_ratio) {
  return reaching_time_bound_h((1.0 - activation_ratio) * kbar, eta);
}

double CommandBounds::clamp(double q) const { return std::clamp(q, u_min_veh_per_h, u_max_veh_per_h); }

namespace {

void validate_bounds(const CommandBounds& b) {
  if (!(b.u_min_veh_per_h >= 0.0)) throw ConfigError("u_min_veh_per_h must be >= 0");
  if (!(b.u_min_veh_per_h < b.u_max_veh_per_h)) throw ConfigError("u_min_veh_per_h must be < u_max_veh_per_h");
}

void validate_ratio(double r) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("activation_ratio must be in (0, 1]");
}

}  // namespace

void SmcConfig::validate() const {
  if (!(lambda_per_h > 0.0)) throw ConfigError("smc lambda_per_h must be > 0");
  if (!(eta > 0.0)) throw ConfigError("smc eta must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("smc alpha must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("smc beta must be >= 0");
  if (switching != SwitchingKind::kSign && !(boundary_width > 0.0)) {
    throw ConfigError("smc boundary_width must be > 0 for saturation/tanh switching");
  }
  validate_bounds(bounds);
  validate_ratio(activation_ratio);
}

SmcStep smc_command(const SmcConfig& cfg, const SmcState& state, const SmcMeasurement& m) {
  if (!state.active) throw ContractViolation("smc_command called on an inactive controller");
  if (!(m.region_length_m > 0.0)) throw InputError("region length must be > 0");
  if (!(m.dt_s > 0.0)) throw InputError("cycle length must be > 0");

  const double length_km = m.region_length_m / 1000.0;
  const double dt_h = m.dt_s / 3600.0;
  const double error = m.k - m.kbar;
  const double x = state.integral_x + error * dt_h;
  const double s = error + cfg.lambda_per_h * x;

  const double u = m.q_out_veh_per_h / length_km - m.q_d_veh_per_h / length_km - cfg.lambda_per_h * error -
                   cfg.gamma() * switching(s, cfg.switching, cfg.boundary_width) - cfg.lambda_per_h * x;
  const double q_raw = u * length_km;

  SmcStep out;
  out.u_unclamped = u;
  out.sliding = s;
  out.lyapunov = lyapunov_value(s);
  out.saturated = cfg.bounds.saturates(q_raw);
  out.q_in_command = cfg.bounds.clamp(q_raw);
  out.state = state;
  // Conditional integration: no accumulation while the command is clipped.
  if (!out.saturated) out.state.integral_x = x;
  out.state.prev_k = m.k;
  out.state.prev_q_out = m.q_out_veh_per_h;
  out.state.prev_q_d = m.q_d_veh_per_h;
  return out;
}

void PicConfig::validate() const {
  if (!std::isfinite(mu)) throw ConfigError("pic mu must be finite");
  if (!std::isfinite(zeta) || zeta == 0.0) throw ConfigError("pic zeta must be finite and non-zero");
  if (!std::isfinite(kp()) || !std::isfinite(ki())) throw ConfigError("pic gains must be finite");
  if (!(kbar > 0.0)) throw ConfigError("pic kbar must be > 0");
  validate_bounds(bounds);
  validate_ratio(activation_ratio);
}

PicStep pic_command(const PicConfig& cfg, const PicState& state, double k_now, double k_prev) {
  if (!state.active) throw ContractViolation("pic_command called on an inactive controller");
  const double q = state.prev_q_in - cfg.kp() * (k_now - k_prev) + cfg.ki() * (cfg.kbar - k_now);
  PicStep out;
  out.unclamped = q;
  out.saturated = cfg.bounds.saturates(q);
  out.q_in_command = cfg.bounds.clamp(q);
  out.state = state;
  out.state.prev_q_in = out.q_in_command;
  out.state.prev_k = k_now;
  return out;
}

PicTuning pic_tune(std::span<const PicSample> samples, double kbar, double q_in_bar) {
  if (samples.size() < 3) throw InputError("pic_tune needs at least three consecutive samples");
  const std::size_t rows = samples.size() - 1;
  std::vector<double> a(rows), b(rows), y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    a[i] = samples[i].k - kbar;
    b[i] = samples[i].q_in - q_in_bar;
    y[i] = samples[i + 1].k - kbar;
  }
  auto dot = [](const std::vector<double>& p, const std::vector<double>& q) {
    return std::inner_product(p.begin(), p.end(), q.begin(), 0.0);
  };

  // Two-column modified Gram-Schmidt: [a b] = [e1 e2] R.
  const double r11 = std::sqrt(dot(a, a));
  const double b_norm = std::sqrt(dot(b, b));
  if (!(r11 > 0.0) || !(b_norm > 0.0)) throw NumericError("pic_tune regressors are rank deficient");
  std::vector<double> e1(rows), e2(rows);
  for (std::size_t i = 0; i < rows; ++i) e1[i] = a[i] / r11;
  const double r12 = dot(e1, b);
  for (std::size_t i = 0; i < rows; ++i) e2[i] = b[i] - r12 * e1[i];
  const double r22 = std::sqrt(dot(e2, e2));
  if (!(r22 > 1e-10 * b_norm)) throw NumericError("pic_tune regressors are rank deficient");
  for (auto& v : e2) v /= r22;

  const double c1 = dot(e1, y);
  const double c2 = dot(e2, y);
  PicTuning t;
  t.zeta = c2 / r22;
  t.mu = (c1 - r12 * t.zeta) / r11;
  double sq = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double r = y[i] - t.mu * a[i] - t.zeta * b[i];
    sq += r * r;
  }
  t.residual_rms = std::sqrt(sq / static_cast<double>(rows));
  t.suspicious = !(t.zeta > 0.0) || !(t.mu > 0.0 && t.mu < 1.0);
  return t;
}

void ActivationConfig::validate() const {
  validate_ratio(ratio);
  if (hold_down_cycles < 1) throw ConfigError("hold_down_cycles must be >= 1");
}

ActivationEvent activation_check(bool active, int cycles_below, double k, double kbar, double ratio,
                                 int hold_down_cycles) {
  const bool above = k >= ratio * kbar;
  if (!active) return above ? ActivationEvent::kActivated : ActivationEvent::kNone;
  if (above) return ActivationEvent::kNone;
  return cycles_below + 1 >= hold_down_cycles ? ActivationEvent::kDeactivated : ActivationEvent::kNone;
}

ActivationTracker::ActivationTracker(ActivationConfig cfg) : cfg_(cfg) { cfg_.validate(); }

ActivationEvent ActivationTracker::update(double k, double kbar) {
  const auto ev = activation_check(active_, below_, k, kbar, cfg_.ratio, cfg_.hold_down_cycles);
  const bool above = k >= cfg_.ratio * kbar;
  switch (ev) {
    case ActivationEvent::kActivated:
      active_ = true;
      below_ = 0;
      break;
    case ActivationEvent::kDeactivated:
      active_ = false;
      below_ = 0;
      break;
    case ActivationEvent::kNone:
      if (active_) below_ = above ? 0 : below_ + 1;
      break;
  }
  return ev;
}

GreenAllocation green_allocation(double q_in_command, std::span<const EntryApproach> entries,
                                 const SignalTiming& timing) {
  GreenAllocation out;
  if (entries.empty()) return out;
  const double total_demand = std::accumulate(entries.begin(), entries.end(), 0.0,
                                              [](double acc, const EntryApproach& e) {
                                                return acc + std::max(0.0, e.demand_veh_per_h);
                                              });
  const double max_green = timing.cycle_s - 2.0 * timing.lost_time_s_per_phase - timing.min_green_s;
  const double n = static_cast<double>(entries.size());
  for (const auto& e : entries) {
    const double share = total_demand > 0.0 ? q_in_command * std::max(0.0, e.demand_veh_per_h) / total_demand
                                             : q_in_command / n;
    const double raw = timing.cycle_s * share / e.saturation_veh_per_h;
    const double g = std::clamp(raw, timing.min_green_s, max_green);
    if (g != raw) out.clamped = true;
    out.flow_veh_per_h.push_back(share);
    out.green_s.push_back(g);
    out.implied_flow_veh_per_h += g / timing.cycle_s * e.saturation_veh_per_h;
  }
  return out;
}

PerimeterController::PerimeterController(const ControllerSpec& spec, double kbar, double region_length_m,
                                         double dt_s)
    : spec_(spec), kbar_(kbar), region_length_m_(region_length_m), dt_s_(dt_s), tracker_(spec.activation) {
  if (!(kbar > 0.0)) throw ConfigError("kbar must be > 0");
  if (spec_.kind == ControllerKind::kSmc) spec_.smc.validate();
  if (spec_.kind == ControllerKind::kPic) {
    spec_.pic.kbar = kbar;
    spec_.pic.validate();
  }
}

ControlDecision PerimeterController::update(const CycleMeasurement& m) {
  ControlDecision d;
  if (spec_.kind == ControllerKind::kNone) {
    last_k_ = m.k;
    return d;
  }
  d.event = tracker_.update(m.k, kbar_);
  if (d.event == ActivationEvent::kActivated) {
    smc_ = SmcState{};
    smc_.active = true;
    pic_ = PicState{};
    pic_.active = true;
    pic_.prev_q_in = spec_.pic.bounds.clamp(m.q_in);
    pic_.prev_k = last_k_;
  } else if (d.event == ActivationEvent::kDeactivated) {
    smc_.active = false;
    pic_.active = false;
  }
  d.active = tracker_.active();
  if (d.active) {
    if (spec_.kind == ControllerKind::kSmc) {
      const SmcStep step = smc_command(spec_.smc, smc_, {m.k, m.q_out, m.q_d, kbar_, region_length_m_, dt_s_});
      smc_ = step.state;
      d.q_in_command = step.q_in_command;
      d.u_unclamped = step.u_unclamped;
      d.sliding = step.sliding;
      d.lyapunov = step.lyapunov;
      d.saturated = step.saturated;
    } else {
      const PicStep step = pic_command(spec_.pic, pic_, m.k, pic_.prev_k);
      pic_ = step.state;
      d.q_in_command = step.q_in_command;
      d.u_unclamped = step.unclamped / (region_length_m_ / 1000.0);
      d.saturated = step.saturated;
    }
  }
  last_k_ = m.k;
  return d;
}

}  // namespace perimeter
