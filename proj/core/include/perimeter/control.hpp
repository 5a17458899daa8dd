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

/// @file control.hpp
/// @brief Perimeter gating controllers: sliding mode (SMC) and
/// proportional-integral (PIC), activation logic and green-time conversion.
///
/// Units used throughout:
///   density k           veh/km
///   flows q             veh/h
///   u = q / L           veh/km/h (L in km)
///   lambda              1/h
///   eta, alpha, beta    veh/km/h
///   integral x          veh*h/km
///
/// The discrete sliding-mode law evaluated at cycle n from cycle n-1
/// measurements is
///
///   x  = x_prev + (k - kbar) * dt
///   S  = (k - kbar) + lambda * x
///   u  = q_out / L - q_d / L - lambda * (k - kbar) - gamma * sw(S) - lambda * x
///   gamma = alpha + beta + eta
///
/// and the commanded region inflow is clamp(u * L, U_min, U_max). The running
/// sum includes the current sample, so the proportional and integral terms
/// use the same measurement index.

#pragma once

#include <span>
#include <vector>

#include "perimeter/network.hpp"
#include "perimeter/signals.hpp"

namespace perimeter {

enum class SwitchingKind { kSign, kSaturation, kTanh };

/// sign (with sign(0) = 0), clamp(S / width, -1, 1) or tanh(S / width).
double switching(double s, SwitchingKind kind, double boundary_width);

/// S = (k - kbar) + lambda * x.
double sliding_value(double k, double integral_x, double lambda_per_h, double kbar);

/// LF = S^2 / 2.
double lyapunov_value(double s);

/// Upper bound |S0| / eta on the time (hours) to reach the sliding surface.
double reaching_time_bound_h(double s0, double eta);

/// The same bound for a controller switched on at `activation_ratio * kbar`
/// with a zero integral: (1 - ratio) * kbar / eta.
double activation_reaching_bound_h(double kbar, double eta, double activation_ratio = 0.85);

struct CommandBounds {
  double u_min_veh_per_h = 480.0;
  double u_max_veh_per_h = 12960.0;

  double clamp(double q) const;
  bool saturates(double q) const { return q < u_min_veh_per_h || q > u_max_veh_per_h; }
};

struct SmcConfig {
  double lambda_per_h = 15.0;
  double eta = 200.0;
  double alpha = 0.0;
  double beta = 0.0;
  SwitchingKind switching = SwitchingKind::kSign;
  /// veh/km; only used by saturation / tanh switching.
  double boundary_width = 1.0;
  CommandBounds bounds;
  double activation_ratio = 0.85;

  void validate() const;
  double gamma() const { return alpha + beta + eta; }
};

struct SmcState {
  /// Running sum of (k - kbar) * dt, hours.
  double integral_x = 0.0;
  double prev_k = 0.0;
  double prev_q_out = 0.0;
  double prev_q_d = 0.0;
  bool active = false;
};

/// Cycle n-1 measurements consumed at cycle n.
struct SmcMeasurement {
  double k = 0.0;
  double q_out_veh_per_h = 0.0;
  double q_d_veh_per_h = 0.0;
  double kbar = 0.0;
  double region_length_m = 0.0;
  double dt_s = 60.0;
};

struct SmcStep {
  double q_in_command = 0.0;
  /// u before saturation, veh/km/h.
  double u_unclamped = 0.0;
  double sliding = 0.0;
  double lyapunov = 0.0;
  bool saturated = false;
  SmcState state;
};

/// One evaluation of the sliding-mode law. The integral is frozen on
/// saturated cycles. Throws ContractViolation when `state.active` is false.
SmcStep smc_command(const SmcConfig& cfg, const SmcState& state, const SmcMeasurement& m);

struct PicConfig {
  double mu = 0.847;
  /// (veh/km) per (veh/h).
  double zeta = 0.002;
  double kbar = 48.0;
  CommandBounds bounds;
  double activation_ratio = 0.85;

  void validate() const;
  double kp() const { return mu / zeta; }
  double ki() const { return (1.0 - mu) / zeta; }
};

struct PicState {
  double prev_q_in = 0.0;
  double prev_k = 0.0;
  bool active = false;
};

struct PicStep {
  double q_in_command = 0.0;
  double unclamped = 0.0;
  bool saturated = false;
  PicState state;
};

/// q_in[n] = q_in[n-1] - Kp (k[n] - k[n-1]) + Ki (kbar - k[n]), clamped.
PicStep pic_command(const PicConfig& cfg, const PicState& state, double k_now, double k_prev);

struct PicSample {
  double k = 0.0;
  double q_in = 0.0;
};

struct PicTuning {
  double mu = 0.0;
  double zeta = 0.0;
  double residual_rms = 0.0;
  /// zeta <= 0 or mu outside (0, 1): the fit is not usable as-is.
  bool suspicious = false;
};

/// Least-squares fit of k[n+1] - kbar = mu (k[n] - kbar) + zeta (q_in[n] - qbar)
/// over consecutive samples. Throws InputError for fewer than three samples
/// and NumericError when the regressors are rank deficient.
PicTuning pic_tune(std::span<const PicSample> samples, double kbar, double q_in_bar);

enum class ActivationEvent { kNone, kActivated, kDeactivated };

struct ActivationConfig {
  double ratio = 0.85;
  int hold_down_cycles = 5;

  void validate() const;
};

/// Switches on at the first k >= ratio * kbar and off after `hold_down_cycles`
/// consecutive cycles below it.
class ActivationTracker {
 public:
  explicit ActivationTracker(ActivationConfig cfg = {});

  ActivationEvent update(double k, double kbar);
  bool active() const { return active_; }

 private:
  ActivationConfig cfg_;
  bool active_ = false;
  int below_ = 0;
};

/// Single-shot form of the tracker's rule for a controller currently in
/// state `active`.
ActivationEvent activation_check(bool active, int cycles_below, double k, double kbar, double ratio,
                                 int hold_down_cycles);

struct EntryApproach {
  LinkId link = -1;
  /// q_s * lanes.
  double saturation_veh_per_h = 1800.0;
  /// Measured demand upstream of the stop line.
  double demand_veh_per_h = 0.0;
};

struct GreenAllocation {
  std::vector<double> flow_veh_per_h;
  std::vector<double> green_s;
  /// Sum of g / C * saturation over the approaches after clamping.
  double implied_flow_veh_per_h = 0.0;
  bool clamped = false;
};

/// Splits the command over the entry approaches in proportion to demand
/// (equal split when there is none) and converts each share to green with
/// G = C * q / q_s, clamped to [min_green, C - 2 * lost - min_green].
GreenAllocation green_allocation(double q_in_command, std::span<const EntryApproach> entries,
                                 const SignalTiming& timing);

enum class ControllerKind { kNone, kSmc, kPic };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kNone;
  SmcConfig smc;
  PicConfig pic;
  ActivationConfig activation;
};

struct CycleMeasurement {
  double k = 0.0;
  double q_in = 0.0;
  double q_out = 0.0;
  double q_d = 0.0;
};

struct ControlDecision {
  bool active = false;
  ActivationEvent event = ActivationEvent::kNone;
  double q_in_command = 0.0;
  double u_unclamped = 0.0;
  double sliding = 0.0;
  double lyapunov = 0.0;
  bool saturated = false;
};

/// Stateful perimeter controller advanced once per cycle.
class PerimeterController {
 public:
  PerimeterController(const ControllerSpec& spec, double kbar, double region_length_m, double dt_s);

  ControlDecision update(const CycleMeasurement& m);
  ControllerKind kind() const { return spec_.kind; }
  const SmcState& smc_state() const { return smc_; }
  const PicState& pic_state() const { return pic_; }

 private:
  ControllerSpec spec_;
  double kbar_;
  double region_length_m_;
  double dt_s_;
  ActivationTracker tracker_;
  SmcState smc_;
  PicState pic_;
  double last_k_ = 0.0;
};

}  // namespace perimeter
