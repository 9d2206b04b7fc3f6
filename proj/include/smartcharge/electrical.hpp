#pragma once

// Equivalent-circuit battery model: an open-circuit voltage source in series
// with an internal resistance, both looked up from (energy, temperature).

#include <filesystem>
#include <vector>

#include "smartcharge/core.hpp"

namespace smartcharge {

/// Rectangular table over (e [kWh], theta [degC]) with bilinear interpolation.
/// Queries outside the hull are clamped to the nearest edge.
class LookupGrid2D {
public:
  LookupGrid2D() = default;
  /// values are row-major: values[ie * theta_axis.size() + it].
  LookupGrid2D(std::vector<double> e_axis, std::vector<double> theta_axis, std::vector<double> values);

  double at(double e, double theta) const;

  const std::vector<double>& e_axis() const noexcept { return e_axis_; }
  const std::vector<double>& theta_axis() const noexcept { return theta_axis_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double node(std::size_t ie, std::size_t it) const { return values_[ie * theta_axis_.size() + it]; }

private:
  std::vector<double> e_axis_;
  std::vector<double> theta_axis_;
  std::vector<double> values_;
};

struct EcmTables {
  LookupGrid2D u_ocv; // V
  LookupGrid2D r_i;   // Ohm

  /// Demo tables: U_OCV affine from 300 V (0 kWh) to 420 V (80 kWh), flat in
  /// temperature; R_i 0.10 Ohm at 25 degC rising linearly to 0.25 Ohm at
  /// -25 degC, flat in energy.
  static EcmTables defaults();
};

struct EcmPoint {
  double u_ocv; // V
  double r_i;   // Ohm
};

EcmPoint lookup(const EcmTables& tables, const BatteryState& state);

/// Greater root of R_i*I^2 + U_OCV*I - p = 0 with p in W (input in kW).
/// Evaluated as 2p / (U_OCV + sqrt(U_OCV^2 + 4 R_i p)), which is algebraically
/// the same root without cancellation for small p.
/// Throws InfeasiblePower when the discriminant is negative.
double battery_current(double u_ocv, double r_i, double p_kw);

/// Ohmic loss R_i * I^2 in kW.
double ohmic_loss(double r_i, double i_bat);

struct EnergyStep {
  double delta_e; // kWh
  double q_loss;  // kW
  double current; // A
};

/// Energy throughput over one interval with U_OCV and R_i frozen at the
/// interval start: delta_e = dt * (p - q_loss).
EnergyStep energy_step(const EcmPoint& ecm, double p_kw, double dt_min);
EnergyStep energy_step(const EcmTables& tables, const BatteryState& state, double p_kw, double dt_min);

/// Terminal voltage U_OCV + R_i * I.
inline double terminal_voltage(const EcmPoint& ecm, double i_bat) { return ecm.u_ocv + ecm.r_i * i_bat; }

/// Long-format lookup CSV `e_kwh,theta_c,u_ocv_v,r_i_ohm`, one row per node.
/// Rows may come in any order but must form a full rectangular grid.
EcmTables load_ecm_csv(const std::filesystem::path& path);
void save_ecm_csv(const std::filesystem::path& path, const EcmTables& tables);

} // namespace smartcharge
