#pragma once

// Discrete dynamic programming over (energy, temperature) with a uniform
// power action grid: backward induction fills a cost-to-go grid and a policy
// grid, forward integration rolls the policy out on the continuous models.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartcharge/aging.hpp"
#include "smartcharge/core.hpp"
#include "smartcharge/electrical.hpp"
#include "smartcharge/kernels.hpp"
#include "smartcharge/tariff.hpp"
#include "smartcharge/thermal.hpp"

namespace smartcharge {

/// How the solver reads the successor's cost-to-go. `nearest` uses the cell
/// closest to the successor state, and forward integration applies the
/// policy stored at the nearest cell. `interpolate` blends the four
/// surrounding cells bilinearly, penalties included, and marks the result
/// penalized when any cell with positive weight is (on the terminal slice,
/// when the nearest cell is). Backward induction also considers, in the last
/// interval, the power that lands exactly on the target. Forward integration
/// re-minimizes over the action grid from the continuous state with the same
/// lookup, plus the exact landing power in every interval.
enum class CostLookup { nearest, interpolate };

std::string_view to_string(CostLookup l) noexcept;
CostLookup cost_lookup_from_string(std::string_view s);

struct Scenario {
  TimeGrid grid{0, 96, 5.0};
  double e0 = 16.0;       // kWh
  double e_target = 80.0; // kWh
  double theta0 = 25.0;   // degC
  double e_lo = 8.0, e_hi = 80.0;
  double theta_lo = -25.0, theta_hi = 60.0;
  double p_lo = -50.0, p_hi = 50.0;
  double e_step = 0.8;
  double theta_step = 1.0;
  double p_step = 1.0;
  double lambda = 1000.0; // EUR
  PriceProfile profile = PriceProfile::flat(0.3);
  double soh0 = 0.99;
  bool include_aging_in_objective = true;
  CostLookup lookup = CostLookup::interpolate;

  void validate() const;

  std::string to_json() const;
  static Scenario from_json(std::string_view text);
  static Scenario load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Models the solver evaluates. All are read-only during a solve.
struct PlantModels {
  EcmTables ecm = EcmTables::defaults();
  ThermalModel thermal = ThermalModel::constant();
  AgingParams aging{};
};

struct PowerBounds {
  double lo;
  double hi;
};

/// Optional state-dependent power limits; the scenario bounds apply when empty.
using DeratingFn = std::function<PowerBounds(const BatteryState&)>;

struct SolveOptions {
  const kernels::KernelTable* kernels = nullptr; // active table when null
  DeratingFn derating;
};

struct DdpGrids {
  int intervals = 0;
  std::vector<double> e_d;
  std::vector<double> theta_d;
  std::vector<double> p_d;
  std::vector<double> cost;           // (N+1) x |e_d| x |theta_d|
  std::vector<double> action;         // N x |e_d| x |theta_d|
  std::vector<std::uint8_t> penalty;  // (N+1) x |e_d| x |theta_d|, 1 where the cost carries lambda

  std::size_t ne() const noexcept { return e_d.size(); }
  std::size_t nt() const noexcept { return theta_d.size(); }
  std::size_t index(int n, std::size_t i, std::size_t j) const noexcept {
    return (static_cast<std::size_t>(n) * e_d.size() + i) * theta_d.size() + j;
  }
  double cost_at(int n, std::size_t i, std::size_t j) const { return cost[index(n, i, j)]; }
  double action_at(int n, std::size_t i, std::size_t j) const { return action[index(n, i, j)]; }
  bool penalized(int n, std::size_t i, std::size_t j) const { return penalty[index(n, i, j)] != 0; }
};

/// lo, lo + step, ... up to hi inclusive (hi is included when step divides
/// the span up to rounding).
std::vector<double> uniform_range(double lo, double hi, double step);

/// Index of the grid value closest to x; the lower index wins exact ties.
std::size_t nearest_index(std::span<const double> grid, double x);

/// Energy points lie on the lattice e_target + k * e_step from the last point
/// at or below e_lo to the first at or above e_hi (the usual e_lo, e_lo +
/// e_step, ... grid when the target is on it).
/// Costs start at lambda except the starting cell and the terminal target row.
DdpGrids build_grids(const Scenario& s);

void backward_induction(const Scenario& s, DdpGrids& grids, const PlantModels& models, const SolveOptions& opt = {});

struct DdpSolution {
  std::vector<double> p_star;
  std::vector<double> e_traj;
  std::vector<double> theta_traj;
  std::vector<double> j_e; // per interval, EUR
  std::vector<double> j_d; // per interval, EUR
  CostBreakdown cost;
  bool feasible = true;
  bool within_bounds = true; // replay: powers and states respected the scenario bounds
  double objective = 0.0;    // cost-to-go at the starting cell (DDP only)
};

DdpSolution forward_integration(const Scenario& s, const DdpGrids& grids, const PlantModels& models,
                                const SolveOptions& opt = {});

/// build_grids + backward_induction + forward_integration.
DdpSolution solve(const Scenario& s, const PlantModels& models, const SolveOptions& opt = {});

/// Simulates given powers through the models without optimization.
DdpSolution replay(std::span<const double> powers, const Scenario& s, const PlantModels& models);

/// Policy followed on grid states only (every successor snapped to its
/// nearest cell), as seen by backward induction. Stops at the first invalid
/// action; `cells` holds the visited (i, j) pairs.
struct SnappedPath {
  std::vector<double> p;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  bool valid = true;
};
SnappedPath snapped_rollout(const Scenario& s, const DdpGrids& grids, const PlantModels& models,
                            const SolveOptions& opt = {});

/// One interval from a continuous state.
struct Transition {
  bool valid = false; // ECM feasible, power and successor within bounds
  BatteryState next;
  double delta_e = 0.0;
  double j_e_buy = 0.0;
  double j_e_sell = 0.0;
  double j_d_cyc = 0.0;
  double j_d_cal = 0.0;
};
Transition transition(const Scenario& s, const PlantModels& models, int n, const BatteryState& state, double p_kw,
                      const DeratingFn& derating = {});

/// `n,t_s,p_kw,e_kwh,theta_c,j_e_eur,j_d_eur`, N+1 rows; the last row has
/// zero power and cost.
void write_solution_csv(const std::filesystem::path& path, const Scenario& s, const DdpSolution& sol);

} // namespace smartcharge
