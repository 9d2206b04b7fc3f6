#pragma once

// Experiment protocols on top of the models and the solver: model
// validation, operating-mode comparison, thermal-model effect, price and
// battery-value sweeps, and the break-even sell/buy ratio.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smartcharge/optimizer.hpp"

namespace smartcharge {

struct ModelErrors {
  std::string model;
  double local_rmse_soc = 0.0;   // % SOC
  double local_rmse_theta = 0.0; // K
  double global_mae_soc = 0.0;   // % SOC
  double global_mae_theta = 0.0; // K
};

struct ValidationReport {
  std::vector<ModelErrors> models;

  const ModelErrors& at(std::string_view name) const;
};

struct NamedThermalModel {
  std::string name;
  const ThermalModel* model;
};

/// Local errors: one-step predictions from measured start-of-interval states.
/// Global errors: rollouts from the measured initial state under the measured
/// powers, compared at the event end.
ValidationReport validate_models(std::span<const ChargingEvent> events, const EcmTables& ecm,
                                 std::span<const NamedThermalModel> models, double e_nom = 80.0);

/// Copies the base scenario and takes the time grid, initial and final
/// energy, initial temperature and SOH from the event.
Scenario scenario_for_event(const ChargingEvent& event, const Scenario& base);

/// Events lasting at least min_hours.
std::vector<std::size_t> select_events(std::span<const ChargingEvent> events, double min_hours = 2.0);

enum class Mode { replay = 1, energy_only = 2, energy_and_aging = 3 };

struct ModeComparison {
  DdpSolution mode[3]; // I, II, III
  bool adopted[3] = {false, false, false};
  double total(int m) const { return mode[m].cost.total(); }
};

/// Mode I replays the event powers; Mode II optimizes energy cost only and
/// prices aging afterwards; Mode III optimizes both. Each optimized mode
/// reports the better of the two solved trajectories under its own objective
/// (energy cost for II, total cost for III); `adopted` marks a mode that took
/// the other mode's trajectory.
ModeComparison compare_modes(const ChargingEvent& event, const Scenario& base, const PlantModels& models,
                             const SolveOptions& opt = {});

struct ThermalEffect {
  DdpSolution constant;     // solved and priced with the constant model
  DdpSolution learned;      // solved and priced with the learned model
  DdpSolution constant_rep; // constant-model powers replayed through the learned model
  double mean_dev_above = 0.0; // mean |p_const - p_learned| where max |p| > threshold
  double mean_dev_below = 0.0;
  std::size_t n_above = 0;
  std::size_t n_below = 0;
  /// Relative cost underestimation of the constant-temperature assumption.
  double underestimation() const;
};

ThermalEffect thermal_effect(const Scenario& s, const PlantModels& constant_models, const PlantModels& learned_models,
                             double threshold_kw = 7.0, const SolveOptions& opt = {});

struct SweepPoint {
  double axis_value = 0.0;
  CostBreakdown cost;
  std::size_t discharging_intervals = 0;
  std::size_t infeasible = 0;
  std::vector<DdpSolution> solutions;
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

std::size_t count_discharging(const DdpSolution& sol);

/// Mode III at each gamma (eps_sell = gamma * eps_buy). Gammas must increase.
SweepResult sweep_gamma(const Scenario& s, const PlantModels& models, std::span<const double> gammas,
                        const SolveOptions& opt = {});

/// Mode III per V_EV over several scenarios. With reoptimize false, the
/// trajectories solved at reference_v_ev are re-priced at each value;
/// otherwise every point is solved afresh.
SweepResult sweep_battery_price(std::span<const Scenario> scenarios, const PlantModels& models,
                                std::span<const double> v_ev_values, bool reoptimize, double reference_v_ev = 6080.0,
                                const SolveOptions& opt = {});

/// (J_E + 2 J_D) / (eta J_E).
double gamma_star(double j_e, double j_d, double eta);

struct TwoIntervalCosts {
  double j_e;    // EUR, energy bought in the charging interval
  double j_d;    // EUR, aging per interval
  double gamma_star;
};

/// One interval charging at +p_kw then one discharging at -p_kw from
/// (e, theta), priced at `price` EUR/kWh; J_D is the mean aging cost of the
/// two intervals.
TwoIntervalCosts gamma_star_two_interval(const PlantModels& models, double price, double p_kw = 7.0,
                                         double theta = 21.0, double e = 40.0, double soh0 = 0.99, double eta = 0.997,
                                         double dt_min = 5.0);

std::vector<std::string> cost_columns();
std::vector<std::string> cost_fields(const CostBreakdown& c);

void write_validation_csv(const std::filesystem::path& path, const ValidationReport& report);
/// `event_id,mode,j_e_buy,j_e_sell,j_d_cyc,j_d_cal,total,total_norm`
void write_modes_csv(const std::filesystem::path& path, std::span<const std::size_t> event_ids,
                     std::span<const ModeComparison> results);
/// `axis_value,j_e_buy,j_e_sell,j_d_cyc,j_d_cal,total,total_norm`, normalized by the first point.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

} // namespace smartcharge
