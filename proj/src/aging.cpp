#include "smartcharge/aging.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "smartcharge/error.hpp"

namespace smartcharge {

using nlohmann::json;

double AgingParams::default_beta_c() {
  const double year_s = 365.0 * 24.0 * 3600.0;
  return 0.025 / (std::exp(-5000.0 / 298.0 + 0.25) * std::sqrt(year_s));
}

void AgingParams::validate() const {
  if (!(beta_a >= 0.0)) throw InvalidParameter("aging: beta_a must be >= 0");
  if (!(beta_b > 0.0)) throw InvalidParameter("aging: beta_b must be > 0");
  if (!(beta_c > 0.0)) throw InvalidParameter("aging: beta_c must be > 0");
  if (!(beta_f > 0.0 && beta_f <= 1.0)) throw InvalidParameter("aging: beta_f must lie in (0, 1]");
  if (!(h_ev > 0.0 && h_ev < 1.0)) throw InvalidParameter("aging: h_ev must lie in (0, 1)");
  if (!(v_ev >= 0.0)) throw InvalidParameter("aging: v_ev must be >= 0");
  if (!std::isfinite(beta_d) || !std::isfinite(beta_e)) throw InvalidParameter("aging: non-finite coefficient");
}

std::string AgingParams::to_json() const {
  json j{{"beta_a", beta_a}, {"beta_b", beta_b}, {"beta_c", beta_c},  {"beta_d", beta_d},
         {"beta_e", beta_e}, {"beta_f", beta_f}, {"v_ev_eur", v_ev}, {"h_ev", h_ev}};
  return j.dump(2);
}

AgingParams AgingParams::from_json(std::string_view text) {
  AgingParams p;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InputError("aging params: expected a JSON object");
    auto get = [&](const char* key, double& dst) {
      if (j.contains(key)) dst = j.at(key).get<double>();
    };
    get("beta_a", p.beta_a);
    get("beta_b", p.beta_b);
    get("beta_c", p.beta_c);
    get("beta_d", p.beta_d);
    get("beta_e", p.beta_e);
    get("beta_f", p.beta_f);
    get("v_ev_eur", p.v_ev);
    get("h_ev", p.h_ev);
  } catch (const json::exception& e) {
    throw InputError(std::string("aging params: ") + e.what());
  }
  p.validate();
  return p;
}

AgingParams AgingParams::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("aging params: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void AgingParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("aging params: cannot write " + path.string());
  out << to_json() << '\n';
}

SohState SohState::from_capacity(double e_max, double e_nom) {
  SohState s{e_max / e_nom, e_max, e_nom};
  s.validate();
  return s;
}

void SohState::validate() const {
  if (!(e_nom > 0.0)) throw InvalidParameter("soh: e_nom must be > 0");
  if (!(h0 > 0.0 && h0 <= 1.0)) throw InvalidParameter("soh: h0 must lie in (0, 1]");
  if (std::abs(h0 - e_max / e_nom) > 1e-12) throw InvalidParameter("soh: h0 != e_max / e_nom");
}

double cyclic_fade(const AgingParams& p, double delta_e_kwh) {
  const double a = std::abs(delta_e_kwh);
  if (a == 0.0) return 0.0;
  return p.beta_b == 1.0 ? p.beta_a * a : p.beta_a * std::pow(a, p.beta_b);
}

double calendar_prefactor(const AgingParams& p, const BatteryState& state) {
  return p.beta_c * std::exp(p.beta_d / (273.0 + state.theta) + p.beta_e * state.e);
}

double equivalent_age(const AgingParams& p, const BatteryState& state, double h0) {
  if (!(h0 > 0.0 && h0 <= 1.0)) throw InvalidParameter("equivalent_age: h0 must lie in (0, 1]");
  const double fade = 1.0 - h0;
  if (fade == 0.0) return 0.0;
  return std::pow(fade / calendar_prefactor(p, state), 1.0 / p.beta_f);
}

double calendar_fade(const AgingParams& p, const BatteryState& state, double h0, double dt_min) {
  if (!(dt_min >= 0.0)) throw InvalidParameter("calendar_fade: dt must be >= 0");
  if (dt_min == 0.0) return 0.0;
  const double a = calendar_prefactor(p, state);
  const double tau = equivalent_age(p, state, h0);
  const double t1 = tau + dt_min * 60.0;
  const double fade = p.beta_f == 0.5 ? a * (std::sqrt(t1) - std::sqrt(tau))
                                      : a * (std::pow(t1, p.beta_f) - std::pow(tau, p.beta_f));
  return fade > 0.0 ? fade : 0.0;
}

AgingCost aging_cost(const AgingParams& p, double delta_e_kwh, const BatteryState& state, double h0, double dt_min) {
  const double scale = p.cost_scale();
  return {cyclic_fade(p, delta_e_kwh) * scale, calendar_fade(p, state, h0, dt_min) * scale};
}

} // namespace smartcharge
