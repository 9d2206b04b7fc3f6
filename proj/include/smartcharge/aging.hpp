#pragma once

// Capacity fade bookkeeping: cyclic fade from energy throughput and calendar
// fade from Arrhenius kinetics, both converted to money through the battery's
// value loss over its first life.

#include <filesystem>
#include <string>
#include <string_view>

#include "smartcharge/core.hpp"

namespace smartcharge {

struct AgingParams {
  double beta_a = 1.667e-6; // 1/kWh^beta_b
  double beta_b = 1.0;
  double beta_c = default_beta_c(); // 1/s^beta_f
  double beta_d = -5000.0;  // K
  double beta_e = 0.00625;  // 1/kWh
  double beta_f = 0.5;
  double v_ev = 6080.0;     // EUR
  double h_ev = 0.2;

  /// Calendar scale giving 2.5 % fade after one year at 25 degC and 40 kWh.
  static double default_beta_c();

  void validate() const;
  /// EUR per unit of fade: v_ev / h_ev.
  double cost_scale() const noexcept { return v_ev / h_ev; }

  std::string to_json() const;
  static AgingParams from_json(std::string_view text);
  static AgingParams load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SohState {
  double h0 = 1.0;
  double e_max = 80.0; // kWh
  double e_nom = 80.0; // kWh

  static SohState from_capacity(double e_max, double e_nom);
  void validate() const;
};

/// beta_a * |delta_e|^beta_b.
double cyclic_fade(const AgingParams& p, double delta_e_kwh);

/// beta_c * exp(beta_d / (273 + theta) + beta_e * e), the calendar rate
/// prefactor at a given state.
double calendar_prefactor(const AgingParams& p, const BatteryState& state);

/// Storage time (s) at the given state that explains a fade of 1 - h0.
double equivalent_age(const AgingParams& p, const BatteryState& state, double h0);

/// F(tau + dt) - F(tau), F(t) = prefactor * t^beta_f, tau = equivalent_age.
double calendar_fade(const AgingParams& p, const BatteryState& state, double h0, double dt_min);

struct AgingCost {
  double j_cyc = 0.0; // EUR
  double j_cal = 0.0; // EUR
};

AgingCost aging_cost(const AgingParams& p, double delta_e_kwh, const BatteryState& state, double h0, double dt_min);

} // namespace smartcharge
