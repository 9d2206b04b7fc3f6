#include "smartcharge/electrical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"

namespace smartcharge {

namespace {

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw InvalidParameter(std::string("lookup table: empty ") + name + " axis");
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (!(axis[i] > axis[i - 1]))
      throw InvalidParameter(std::string("lookup table: ") + name + " axis not strictly increasing");
}

// Cell index k and fraction t such that x ~ axis[k] + t * (axis[k+1] - axis[k]).
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double x) {
  if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
  if (x >= axis.back()) return {axis.size() - 2, 1.0};
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  auto k = static_cast<std::size_t>(it - axis.begin()) - 1;
  return {k, (x - axis[k]) / (axis[k + 1] - axis[k])};
}

} // namespace

LookupGrid2D::LookupGrid2D(std::vector<double> e_axis, std::vector<double> theta_axis, std::vector<double> values)
    : e_axis_(std::move(e_axis)), theta_axis_(std::move(theta_axis)), values_(std::move(values)) {
  check_axis(e_axis_, "energy");
  check_axis(theta_axis_, "temperature");
  if (values_.size() != e_axis_.size() * theta_axis_.size())
    throw InvalidParameter("lookup table: value count does not match axes");
}

double LookupGrid2D::at(double e, double theta) const {
  const auto nt = theta_axis_.size();
  auto [ie, te] = locate(e_axis_, e);
  auto [it, tt] = locate(theta_axis_, theta);
  const std::size_t ie1 = e_axis_.size() > 1 ? ie + 1 : ie;
  const std::size_t it1 = nt > 1 ? it + 1 : it;
  const double v00 = values_[ie * nt + it];
  const double v01 = values_[ie * nt + it1];
  const double v10 = values_[ie1 * nt + it];
  const double v11 = values_[ie1 * nt + it1];
  const double lo = v00 + tt * (v01 - v00);
  const double hi = v10 + tt * (v11 - v10);
  return lo + te * (hi - lo);
}

EcmTables EcmTables::defaults() {
  std::vector<double> e_axis;
  for (int k = 0; k <= 8; ++k) e_axis.push_back(10.0 * k);
  const std::vector<double> theta_axis{-25.0, 0.0, 25.0, 60.0};
  const std::vector<double> r_by_theta{0.25, 0.175, 0.10, 0.10};
  std::vector<double> u, r;
  for (double e : e_axis) {
    for (std::size_t j = 0; j < theta_axis.size(); ++j) {
      u.push_back(300.0 + 1.5 * e);
      r.push_back(r_by_theta[j]);
    }
  }
  return {LookupGrid2D(e_axis, theta_axis, std::move(u)), LookupGrid2D(e_axis, theta_axis, std::move(r))};
}

EcmPoint lookup(const EcmTables& tables, const BatteryState& state) {
  return {tables.u_ocv.at(state.e, state.theta), tables.r_i.at(state.e, state.theta)};
}

// The operation order here is mirrored exactly by the vector kernels.
double battery_current(double u_ocv, double r_i, double p_kw) {
  const double p_w = p_kw * 1000.0;
  const double disc = u_ocv * u_ocv + (4.0 * r_i) * p_w;
  if (disc < 0.0)
    throw InfeasiblePower("battery_current: discharge power " + std::to_string(p_kw) +
                          " kW exceeds the deliverable maximum");
  return (2.0 * p_w) / (u_ocv + std::sqrt(disc));
}

double ohmic_loss(double r_i, double i_bat) { return (r_i * i_bat) * i_bat / 1000.0; }

EnergyStep energy_step(const EcmPoint& ecm, double p_kw, double dt_min) {
  const double i = battery_current(ecm.u_ocv, ecm.r_i, p_kw);
  const double q = ohmic_loss(ecm.r_i, i);
  return {(dt_min / 60.0) * (p_kw - q), q, i};
}

EnergyStep energy_step(const EcmTables& tables, const BatteryState& state, double p_kw, double dt_min) {
  return energy_step(lookup(tables, state), p_kw, dt_min);
}

EcmTables load_ecm_csv(const std::filesystem::path& path) {
  auto table = csv::read(path);
  table.expect_header({"e_kwh", "theta_c", "u_ocv_v", "r_i_ohm"});
  std::map<std::pair<double, double>, std::pair<double, double>> nodes;
  std::vector<double> es, ts;
  for (const auto& row : table.rows) {
    const double e = csv::parse_double(row[0]);
    const double t = csv::parse_double(row[1]);
    const double u = csv::parse_double(row[2]);
    const double r = csv::parse_double(row[3]);
    if (!(u > 0.0) || !(r > 0.0)) throw InputError("ecm table: u_ocv and r_i must be positive");
    if (!nodes.emplace(std::make_pair(e, t), std::make_pair(u, r)).second)
      throw InputError("ecm table: duplicate node");
    es.push_back(e);
    ts.push_back(t);
  }
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (nodes.size() != es.size() * ts.size()) throw InputError("ecm table: grid is not rectangular");
  std::vector<double> u, r;
  for (double e : es) {
    for (double t : ts) {
      auto it = nodes.find({e, t});
      if (it == nodes.end()) throw InputError("ecm table: grid is not rectangular");
      u.push_back(it->second.first);
      r.push_back(it->second.second);
    }
  }
  return {LookupGrid2D(es, ts, std::move(u)), LookupGrid2D(es, ts, std::move(r))};
}

void save_ecm_csv(const std::filesystem::path& path, const EcmTables& tables) {
  if (tables.u_ocv.e_axis() != tables.r_i.e_axis() || tables.u_ocv.theta_axis() != tables.r_i.theta_axis())
    throw InvalidParameter("ecm table: u_ocv and r_i must share axes to be saved together");
  csv::Table table;
  table.header = {"e_kwh", "theta_c", "u_ocv_v", "r_i_ohm"};
  const auto& es = tables.u_ocv.e_axis();
  const auto& ts = tables.u_ocv.theta_axis();
  for (std::size_t i = 0; i < es.size(); ++i)
    for (std::size_t j = 0; j < ts.size(); ++j)
      table.rows.push_back({csv::format(es[i]), csv::format(ts[j]), csv::format(tables.u_ocv.node(i, j)),
                            csv::format(tables.r_i.node(i, j))});
  csv::write(path, table);
}

} // namespace smartcharge
