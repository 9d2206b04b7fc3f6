#include "smartcharge/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"
#include "smartcharge/learning.hpp"

namespace smartcharge {

const ModelErrors& ValidationReport::at(std::string_view name) const {
  for (const auto& m : models)
    if (m.model == name) return m;
  throw InvalidParameter("validation report: no model '" + std::string(name) + "'");
}

ValidationReport validate_models(std::span<const ChargingEvent> events, const EcmTables& ecm,
                                 std::span<const NamedThermalModel> models, double e_nom) {
  if (events.empty()) throw InvalidParameter("validate_models: empty corpus");
  if (!(e_nom > 0.0)) throw InvalidParameter("validate_models: e_nom must be > 0");
  ValidationReport report;
  const double pct = 100.0 / e_nom;
  for (const NamedThermalModel& nm : models) {
    std::vector<double> de_pred, de_meas, dth_pred, dth_meas;
    std::vector<double> eN_pred, eN_meas, thN_pred, thN_meas;
    for (const ChargingEvent& ev : events) {
      ev.validate();
      const double dt = ev.grid.dt_minutes();
      BatteryState roll{ev.e[0], ev.theta[0]};
      for (std::size_t n = 0; n < ev.p.size(); ++n) {
        const BatteryState meas{ev.e[n], ev.theta[n]};
        const EnergyStep es = energy_step(ecm, meas, ev.p[n], dt);
        de_pred.push_back(es.delta_e * pct);
        de_meas.push_back((ev.e[n + 1] - ev.e[n]) * pct);
        dth_pred.push_back(nm.model->predict(make_features(meas, ev.p[n], es.q_loss, es.delta_e)));
        dth_meas.push_back(ev.theta[n + 1] - ev.theta[n]);

        const EnergyStep rs = energy_step(ecm, roll, ev.p[n], dt);
        const double rth = nm.model->predict(make_features(roll, ev.p[n], rs.q_loss, rs.delta_e));
        roll = {roll.e + rs.delta_e, roll.theta + rth};
      }
      eN_pred.push_back(roll.e * pct);
      eN_meas.push_back(ev.e.back() * pct);
      thN_pred.push_back(roll.theta);
      thN_meas.push_back(ev.theta.back());
    }
    report.models.push_back({nm.name, rmse(de_pred, de_meas), rmse(dth_pred, dth_meas), mae(eN_pred, eN_meas),
                             mae(thN_pred, thN_meas)});
  }
  return report;
}

Scenario scenario_for_event(const ChargingEvent& event, const Scenario& base) {
  event.validate();
  Scenario s = base;
  s.grid = event.grid;
  s.e0 = event.e.front();
  s.e_target = event.e.back();
  s.theta0 = event.theta.front();
  s.soh0 = event.soh0;
  return s;
}

std::vector<std::size_t> select_events(std::span<const ChargingEvent> events, double min_hours) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (events[i].grid.duration_hours() >= min_hours - 1e-9) out.push_back(i);
  return out;
}

ModeComparison compare_modes(const ChargingEvent& event, const Scenario& base, const PlantModels& models,
                             const SolveOptions& opt) {
  if (event.grid.duration_hours() < 2.0 - 1e-9) throw InvalidParameter("compare_modes: event shorter than 2 h");
  Scenario s = scenario_for_event(event, base);
  ModeComparison out;
  out.mode[0] = replay(event.p, s, models);
  s.include_aging_in_objective = false;
  out.mode[1] = solve(s, models, opt);
  s.include_aging_in_objective = true;
  out.mode[2] = solve(s, models, opt);
  const DdpSolution two = out.mode[1], three = out.mode[2];
  if (three.feasible && (!two.feasible || three.cost.energy() < two.cost.energy())) {
    out.mode[1] = three;
    out.adopted[1] = true;
  }
  if (two.feasible && (!three.feasible || two.cost.total() < three.cost.total())) {
    out.mode[2] = two;
    out.adopted[2] = true;
  }
  return out;
}

double ThermalEffect::underestimation() const {
  const double truth = constant_rep.cost.total();
  if (truth == 0.0) return 0.0;
  return (truth - constant.cost.total()) / truth;
}

ThermalEffect thermal_effect(const Scenario& s, const PlantModels& constant_models, const PlantModels& learned_models,
                             double threshold_kw, const SolveOptions& opt) {
  ThermalEffect r;
  Scenario s3 = s;
  s3.include_aging_in_objective = true;
  r.constant = solve(s3, constant_models, opt);
  r.learned = solve(s3, learned_models, opt);
  r.constant_rep = replay(r.constant.p_star, s3, learned_models);
  double above = 0.0, below = 0.0;
  for (std::size_t n = 0; n < r.constant.p_star.size(); ++n) {
    const double pc = r.constant.p_star[n], pl = r.learned.p_star[n];
    const double dev = std::abs(pc - pl);
    if (std::max(std::abs(pc), std::abs(pl)) > threshold_kw) {
      above += dev;
      ++r.n_above;
    } else {
      below += dev;
      ++r.n_below;
    }
  }
  r.mean_dev_above = r.n_above ? above / static_cast<double>(r.n_above) : 0.0;
  r.mean_dev_below = r.n_below ? below / static_cast<double>(r.n_below) : 0.0;
  return r;
}

std::size_t count_discharging(const DdpSolution& sol) {
  return static_cast<std::size_t>(std::count_if(sol.p_star.begin(), sol.p_star.end(), [](double p) { return p < 0.0; }));
}

namespace {

void add_point(SweepPoint& pt, DdpSolution sol) {
  pt.cost += sol.cost;
  pt.discharging_intervals += count_discharging(sol);
  if (!sol.feasible) ++pt.infeasible;
  pt.solutions.push_back(std::move(sol));
}

} // namespace

SweepResult sweep_gamma(const Scenario& s, const PlantModels& models, std::span<const double> gammas,
                        const SolveOptions& opt) {
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i - 1])) throw InvalidParameter("sweep_gamma: gammas must increase");
  SweepResult res;
  for (double g : gammas) {
    Scenario sg = s;
    sg.include_aging_in_objective = true;
    sg.profile = scale_gamma(s.profile, g);
    SweepPoint pt;
    pt.axis_value = g;
    add_point(pt, solve(sg, models, opt));
    res.points.push_back(std::move(pt));
  }
  return res;
}

SweepResult sweep_battery_price(std::span<const Scenario> scenarios, const PlantModels& models,
                                std::span<const double> v_ev_values, bool reoptimize, double reference_v_ev,
                                const SolveOptions& opt) {
  for (double v : v_ev_values)
    if (!(v >= 0.0)) throw InvalidParameter("sweep_battery_price: V_EV must be >= 0");
  std::vector<DdpSolution> reference;
  if (!reoptimize) {
    PlantModels ref = models;
    ref.aging.v_ev = reference_v_ev;
    for (const Scenario& s : scenarios) {
      Scenario s3 = s;
      s3.include_aging_in_objective = true;
      reference.push_back(solve(s3, ref, opt));
    }
  }
  SweepResult res;
  for (double v : v_ev_values) {
    PlantModels m = models;
    m.aging.v_ev = v;
    SweepPoint pt;
    pt.axis_value = v;
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
      Scenario s3 = scenarios[k];
      s3.include_aging_in_objective = true;
      if (reoptimize) {
        add_point(pt, solve(s3, m, opt));
      } else {
        DdpSolution sol = replay(reference[k].p_star, s3, m);
        sol.feasible = reference[k].feasible;
        add_point(pt, std::move(sol));
      }
    }
    res.points.push_back(std::move(pt));
  }
  return res;
}

double gamma_star(double j_e, double j_d, double eta) {
  if (!(j_e > 0.0)) throw InvalidParameter("gamma_star: j_e must be > 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidParameter("gamma_star: eta must lie in (0, 1]");
  return (j_e + 2.0 * j_d) / (eta * j_e);
}

TwoIntervalCosts gamma_star_two_interval(const PlantModels& models, double price, double p_kw, double theta,
                                         double e, double soh0, double eta, double dt_min) {
  const double dt_h = dt_min / 60.0;
  const BatteryState s0{e, theta};
  const EnergyStep up = energy_step(models.ecm, s0, p_kw, dt_min);
  const BatteryState s1{e + up.delta_e, theta};
  const EnergyStep down = energy_step(models.ecm, s1, -p_kw, dt_min);
  const AgingCost a0 = aging_cost(models.aging, up.delta_e, s0, soh0, dt_min);
  const AgingCost a1 = aging_cost(models.aging, down.delta_e, s1, soh0, dt_min);
  TwoIntervalCosts c;
  c.j_e = p_kw * dt_h * price;
  c.j_d = 0.5 * ((a0.j_cyc + a0.j_cal) + (a1.j_cyc + a1.j_cal));
  c.gamma_star = gamma_star(c.j_e, c.j_d, eta);
  return c;
}

std::vector<std::string> cost_columns() { return {"j_e_buy", "j_e_sell", "j_d_cyc", "j_d_cal", "total"}; }

std::vector<std::string> cost_fields(const CostBreakdown& c) {
  return {csv::format(c.j_e_buy), csv::format(c.j_e_sell), csv::format(c.j_d_cyc), csv::format(c.j_d_cal),
          csv::format(c.total())};
}

void write_validation_csv(const std::filesystem::path& path, const ValidationReport& report) {
  csv::Table t;
  t.header = {"model", "local_rmse", "global_mae"};
  for (const ModelErrors& m : report.models) {
    t.rows.push_back({m.model + "_theta_k", csv::format(m.local_rmse_theta), csv::format(m.global_mae_theta)});
    t.rows.push_back({m.model + "_soc_pct", csv::format(m.local_rmse_soc), csv::format(m.global_mae_soc)});
  }
  csv::write(path, t);
}

void write_modes_csv(const std::filesystem::path& path, std::span<const std::size_t> event_ids,
                     std::span<const ModeComparison> results) {
  if (event_ids.size() != results.size()) throw InvalidParameter("modes csv: id count mismatch");
  csv::Table t;
  t.header = {"event_id", "mode"};
  for (auto& c : cost_columns()) t.header.push_back(c);
  t.header.push_back("total_norm");
  for (std::size_t k = 0; k < results.size(); ++k) {
    const double base = results[k].total(0);
    for (int m = 0; m < 3; ++m) {
      std::vector<std::string> row{csv::format(static_cast<long long>(event_ids[k])),
                                   csv::format(static_cast<long long>(m + 1))};
      for (auto& f : cost_fields(results[k].mode[m].cost)) row.push_back(f);
      row.push_back(csv::format(base != 0.0 ? results[k].total(m) / base : 0.0));
      t.rows.push_back(std::move(row));
    }
  }
  csv::write(path, t);
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  csv::Table t;
  t.header = {"axis_value"};
  for (auto& c : cost_columns()) t.header.push_back(c);
  t.header.push_back("total_norm");
  const double base = sweep.points.empty() ? 0.0 : sweep.points.front().cost.total();
  for (const SweepPoint& p : sweep.points) {
    std::vector<std::string> row{csv::format(p.axis_value)};
    for (auto& f : cost_fields(p.cost)) row.push_back(f);
    row.push_back(csv::format(base != 0.0 ? p.cost.total() / base : 0.0));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

} // namespace smartcharge
