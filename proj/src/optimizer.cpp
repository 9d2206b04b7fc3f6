#include "smartcharge/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"

namespace smartcharge {

using nlohmann::json;

namespace {

double energy_cost(double p, double dt_h, const PricePair& price) {
  return p >= 0.0 ? (p * dt_h) * price.buy : (p * dt_h) * price.sell;
}

PowerBounds bounds_at(const Scenario& s, const DeratingFn& derating, const BatteryState& state) {
  return derating ? derating(state) : PowerBounds{s.p_lo, s.p_hi};
}

// Nearest index on a uniform grid; same result as nearest_index.
struct UniformAxis {
  const std::vector<double>& g;
  double lo;
  double inv_step;

  std::size_t nearest(double x) const {
    const std::size_t n = g.size();
    const double k = std::floor((x - lo) * inv_step);
    if (!(k >= 0.0)) return 0;
    if (k >= static_cast<double>(n - 1)) return n - 1;
    const std::size_t c = static_cast<std::size_t>(k);
    std::size_t best = c == 0 ? 0 : c - 1;
    double bd = std::abs(g[best] - x);
    for (std::size_t m = best + 1; m <= std::min(c + 1, n - 1); ++m) {
      const double d = std::abs(g[m] - x);
      if (d < bd) {
        bd = d;
        best = m;
      }
    }
    return best;
  }

  // Lower neighbour and weight of the upper one, clamped to the hull.
  std::size_t lower(double x, double& w) const {
    const std::size_t n = g.size();
    if (n == 1) {
      w = 0.0;
      return 0;
    }
    const double f = (x - lo) * inv_step;
    double k = std::floor(f);
    if (!(k >= 0.0)) k = 0.0;
    if (k > static_cast<double>(n - 2)) k = static_cast<double>(n - 2);
    w = std::clamp(f - k, 0.0, 1.0);
    return static_cast<std::size_t>(k);
  }
};

json profile_to_json(const PriceProfile& p) {
  return {{"eps_buy", p.eps_buy}, {"eps_sell", p.eps_sell}, {"label", p.label}};
}

PriceProfile profile_from_json(const json& j) {
  PriceProfile p;
  const auto buy = j.at("eps_buy").get<std::vector<double>>();
  const auto sell = j.contains("eps_sell") ? j.at("eps_sell").get<std::vector<double>>() : buy;
  if (buy.size() != 24 || sell.size() != 24) throw InputError("scenario: price arrays need 24 entries");
  std::copy(buy.begin(), buy.end(), p.eps_buy.begin());
  std::copy(sell.begin(), sell.end(), p.eps_sell.begin());
  p.label = j.value("label", std::string("custom"));
  return p;
}

} // namespace

std::string_view to_string(CostLookup l) noexcept { return l == CostLookup::nearest ? "nearest" : "interpolate"; }

CostLookup cost_lookup_from_string(std::string_view s) {
  if (s == "nearest") return CostLookup::nearest;
  if (s == "interpolate") return CostLookup::interpolate;
  throw InvalidParameter("unknown cost lookup '" + std::string(s) + "'");
}

void Scenario::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InvalidParameter(std::string("scenario: ") + what);
  };
  need(e_lo <= e_hi, "e_lo > e_hi");
  need(e_lo <= e0 && e0 <= e_hi, "e0 outside [e_lo, e_hi]");
  need(e_lo <= e_target && e_target <= e_hi, "e_target outside [e_lo, e_hi]");
  need(theta_lo <= theta0 && theta0 <= theta_hi, "theta0 outside [theta_lo, theta_hi]");
  need(p_lo <= p_hi, "p_lo > p_hi");
  need(e_step > 0.0 && theta_step > 0.0 && p_step > 0.0, "steps must be > 0");
  need(lambda > 0.0, "lambda must be > 0");
  need(soh0 > 0.0 && soh0 <= 1.0, "soh0 outside (0, 1]");
  profile.validate();
}

std::string Scenario::to_json() const {
  json j{{"t0_s", grid.t0()},
         {"intervals", grid.intervals()},
         {"dt_min", grid.dt_minutes()},
         {"e0_kwh", e0},
         {"e_target_kwh", e_target},
         {"theta0_c", theta0},
         {"e_lo", e_lo},
         {"e_hi", e_hi},
         {"theta_lo", theta_lo},
         {"theta_hi", theta_hi},
         {"p_lo", p_lo},
         {"p_hi", p_hi},
         {"e_step", e_step},
         {"theta_step", theta_step},
         {"p_step", p_step},
         {"lambda_eur", lambda},
         {"soh0", soh0},
         {"include_aging_in_objective", include_aging_in_objective},
         {"cost_lookup", std::string(smartcharge::to_string(lookup))},
         {"profile", profile_to_json(profile)}};
  return j.dump(2);
}

Scenario Scenario::from_json(std::string_view text) {
  Scenario s;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InputError("scenario: expected a JSON object");
    s.grid = TimeGrid(j.value("t0_s", s.grid.t0()), j.value("intervals", s.grid.intervals()),
                      j.value("dt_min", s.grid.dt_minutes()));
    s.e0 = j.value("e0_kwh", s.e0);
    s.e_target = j.value("e_target_kwh", s.e_target);
    s.theta0 = j.value("theta0_c", s.theta0);
    s.e_lo = j.value("e_lo", s.e_lo);
    s.e_hi = j.value("e_hi", s.e_hi);
    s.theta_lo = j.value("theta_lo", s.theta_lo);
    s.theta_hi = j.value("theta_hi", s.theta_hi);
    s.p_lo = j.value("p_lo", s.p_lo);
    s.p_hi = j.value("p_hi", s.p_hi);
    s.e_step = j.value("e_step", s.e_step);
    s.theta_step = j.value("theta_step", s.theta_step);
    s.p_step = j.value("p_step", s.p_step);
    s.lambda = j.value("lambda_eur", s.lambda);
    s.soh0 = j.value("soh0", s.soh0);
    s.include_aging_in_objective = j.value("include_aging_in_objective", s.include_aging_in_objective);
    if (j.contains("cost_lookup")) s.lookup = cost_lookup_from_string(j.at("cost_lookup").get<std::string>());
    if (j.contains("profile")) s.profile = profile_from_json(j.at("profile"));
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw InputError(e.what());
  }
  try {
    s.validate();
  } catch (const InvalidParameter& e) {
    throw InputError(e.what());
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("scenario: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void Scenario::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("scenario: cannot write " + path.string());
  out << to_json() << '\n';
}

std::vector<double> uniform_range(double lo, double hi, double step) {
  if (!(step > 0.0)) throw InvalidParameter("range: step must be > 0");
  if (!(lo <= hi)) throw InvalidParameter("range: empty");
  const std::size_t count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) v[k] = lo + static_cast<double>(k) * step;
  return v;
}

std::size_t nearest_index(std::span<const double> grid, double x) {
  if (grid.empty()) throw InvalidParameter("nearest_index: empty grid");
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
  const std::size_t lo = hi - 1;
  return std::abs(grid[hi] - x) < std::abs(x - grid[lo]) ? hi : lo;
}

DdpGrids build_grids(const Scenario& s) {
  s.validate();
  DdpGrids g;
  g.intervals = s.grid.intervals();
  // Energy lattice through the target so that the terminal row is exact,
  // reaching up to or past both bounds so no state lies outside the nodes.
  const double below = std::ceil((s.e_target - s.e_lo) / s.e_step - 1e-9);
  const double above = std::ceil((s.e_hi - s.e_target) / s.e_step - 1e-9);
  g.e_d = uniform_range(s.e_target - below * s.e_step, s.e_target + above * s.e_step, s.e_step);
  g.theta_d = uniform_range(s.theta_lo, s.theta_hi, s.theta_step);
  g.p_d = uniform_range(s.p_lo, s.p_hi, s.p_step);
  const std::size_t slice = g.ne() * g.nt();
  const std::size_t n_slices = static_cast<std::size_t>(g.intervals) + 1;
  g.cost.assign(n_slices * slice, s.lambda);
  g.penalty.assign(n_slices * slice, 1);
  g.action.assign(static_cast<std::size_t>(g.intervals) * slice, 0.0);

  const std::size_t i0 = nearest_index(g.e_d, s.e0);
  const std::size_t j0 = nearest_index(g.theta_d, s.theta0);
  g.cost[g.index(0, i0, j0)] = 0.0;
  g.penalty[g.index(0, i0, j0)] = 0;
  const std::size_t iN = nearest_index(g.e_d, s.e_target);
  for (std::size_t j = 0; j < g.nt(); ++j) {
    g.cost[g.index(g.intervals, iN, j)] = 0.0;
    g.penalty[g.index(g.intervals, iN, j)] = 0;
  }
  return g;
}

Transition transition(const Scenario& s, const PlantModels& models, int n, const BatteryState& state, double p_kw,
                      const DeratingFn& derating) {
  Transition t;
  const double dt = s.grid.dt_minutes();
  const PowerBounds pb = bounds_at(s, derating, state);
  const EcmPoint ecm = lookup(models.ecm, state);
  const double u = ecm.u_ocv, r = ecm.r_i;
  if (u * u + (4.0 * r) * (p_kw * 1000.0) < 0.0) return t;
  const EnergyStep es = energy_step(ecm, p_kw, dt);
  const double dth = models.thermal.predict(make_features(state, p_kw, es.q_loss, es.delta_e));
  t.next = {state.e + es.delta_e, state.theta + dth};
  t.delta_e = es.delta_e;
  const PricePair price = price_at(s.profile, s.grid.instant(n));
  const double je = energy_cost(p_kw, s.grid.dt_hours(), price);
  (p_kw >= 0.0 ? t.j_e_buy : t.j_e_sell) = je;
  const AgingCost ac = aging_cost(models.aging, es.delta_e, state, s.soh0, dt);
  t.j_d_cyc = ac.j_cyc;
  t.j_d_cal = ac.j_cal;
  t.valid = pb.lo <= p_kw && p_kw <= pb.hi && s.e_lo <= t.next.e && t.next.e <= s.e_hi &&
            s.theta_lo <= t.next.theta && t.next.theta <= s.theta_hi;
  return t;
}

namespace {

// Cost of every action from one state at slice n against slice n+1.
class ActionEvaluator {
 public:
  ActionEvaluator(const Scenario& s, const DdpGrids& g, const PlantModels& models, const SolveOptions& opt)
      : s_(s), g_(g), models_(models), opt_(opt), kt_(opt.kernels ? *opt.kernels : kernels::active()),
        ax_e_{g.e_d, g.e_d.front(), 1.0 / s.e_step}, ax_t_{g.theta_d, g.theta_d.front(), 1.0 / s.theta_step} {
    const std::size_t na = g.p_d.size();
    for (auto* v : {&p_abs_, &de_, &q_, &de_abs_, &th_, &dth_, &cyc_, &je_, &cached_}) v->resize(na);
    ok_.resize(na);
    flag_.resize(na);
    valid_.resize(na);
    for (std::size_t k = 0; k < na; ++k) p_abs_[k] = std::abs(g.p_d[k]);
  }

  std::size_t actions() const { return g_.p_d.size(); }

  const kernels::KernelTable& kernels() const { return kt_; }

  void set_slice(int n) {
    n_ = n;
    price_ = price_at(s_.profile, s_.grid.instant(n));
    for (std::size_t k = 0; k < g_.p_d.size(); ++k) je_[k] = energy_cost(g_.p_d[k], s_.grid.dt_hours(), price_);
    next_cost_ = g_.cost.data() + g_.index(n + 1, 0, 0);
    next_pen_ = g_.penalty.data() + g_.index(n + 1, 0, 0);
  }

  // Successor offsets of every action from st; time-invariant.
  void dynamics(const BatteryState& st, const EcmPoint& p, double* de, double* dth, std::uint8_t* ok) {
    const std::size_t na = g_.p_d.size();
    kt_.ecm_sweep(p.u_ocv, p.r_i, s_.grid.dt_hours(), g_.p_d.data(), na, de, q_.data(), ok);
    for (std::size_t k = 0; k < na; ++k) de_abs_[k] = std::abs(de[k]);
    std::fill(th_.begin(), th_.end(), st.theta);
    models_.thermal.predict_batch({p_abs_, q_, de_abs_, th_}, std::span<double>(dth, na), kt_, ws_);
  }

  // Scaled cyclic aging cost per action.
  void cyclic(const double* de, double* cyc) const {
    const double scale = models_.aging.cost_scale();
    for (std::size_t k = 0; k < g_.p_d.size(); ++k) cyc[k] = cyclic_fade(models_.aging, de[k]) * scale;
  }

  std::size_t evaluate(const BatteryState& st, const EcmPoint& p, double jcal) {
    dynamics(st, p, de_.data(), dth_.data(), ok_.data());
    cyclic(de_.data(), cyc_.data());
    return score(st, de_.data(), dth_.data(), ok_.data(), cyc_.data(), bounds_at(s_, opt_.derating, st), jcal);
  }

  // Returns the argmin action index; jcal is the scaled calendar cost.
  std::size_t score(const BatteryState& st, const double* de, const double* dth, const std::uint8_t* ok,
                    const double* cyc, const PowerBounds& pb, double jcal) {
    const std::size_t na = g_.p_d.size(), nt = g_.nt();
    const bool with_aging = s_.include_aging_in_objective;
    const bool interpolate = s_.lookup == CostLookup::interpolate;
    const bool terminal = n_ + 1 == g_.intervals;

    for (std::size_t k = 0; k < na; ++k) {
      cached_[k] = s_.lambda;
      flag_[k] = 1;
      valid_[k] = 0;
      if (!ok[k] || !(pb.lo <= g_.p_d[k] && g_.p_d[k] <= pb.hi)) continue;
      const double e1 = st.e + de[k];
      const double t1 = st.theta + dth[k];
      if (!(s_.e_lo <= e1 && e1 <= s_.e_hi && s_.theta_lo <= t1 && t1 <= s_.theta_hi)) continue;
      valid_[k] = 1;
      const double trans = with_aging ? je_[k] + (cyc[k] + jcal) : je_[k];
      if (interpolate) {
        cached_[k] = trans + blend(e1, t1, terminal, flag_[k]);
      } else {
        const std::size_t succ = ax_e_.nearest(e1) * nt + ax_t_.nearest(t1);
        cached_[k] = trans + next_cost_[succ];
        flag_[k] = next_pen_[succ];
      }
    }
    return kt_.argmin(cached_.data(), na);
  }

  // The continuous power that ends this interval exactly at the target, with
  // its cost, when it respects all bounds.
  std::optional<std::pair<double, double>> landing(const BatteryState& st, const EcmPoint& ecm, double jcal) const {
    const double dt_h = s_.grid.dt_hours();
    const double i = (s_.e_target - st.e) * 1000.0 / (dt_h * ecm.u_ocv);
    if (i < -ecm.u_ocv / (2.0 * ecm.r_i)) return std::nullopt;
    const double p = (ecm.u_ocv * i + ecm.r_i * i * i) / 1000.0;
    const PowerBounds pb = bounds_at(s_, opt_.derating, st);
    if (!(pb.lo <= p && p <= pb.hi)) return std::nullopt;
    const EnergyStep es = energy_step(ecm, p, s_.grid.dt_minutes());
    const double e1 = st.e + es.delta_e;
    const double t1 = st.theta + models_.thermal.predict(make_features(st, p, es.q_loss, es.delta_e));
    if (!(s_.e_lo <= e1 && e1 <= s_.e_hi && s_.theta_lo <= t1 && t1 <= s_.theta_hi)) return std::nullopt;
    const double je = energy_cost(p, dt_h, price_);
    const double trans =
        s_.include_aging_in_objective ? je + (cyclic_fade(models_.aging, es.delta_e) * models_.aging.cost_scale() + jcal) : je;
    std::uint8_t flag = 0;
    const double next = blend(e1, t1, n_ + 1 == g_.intervals, flag);
    if (flag) return std::nullopt;
    return std::pair{p, trans + next};
  }

  double cost(std::size_t k) const { return cached_[k]; }
  bool flagged(std::size_t k) const { return flag_[k] != 0; }
  bool valid(std::size_t k) const { return valid_[k] != 0; }

 private:
  const Scenario& s_;
  const DdpGrids& g_;
  const PlantModels& models_;
  const SolveOptions& opt_;
  const kernels::KernelTable& kt_;
  UniformAxis ax_e_, ax_t_;
  // Bilinear successor cost. The flag is the OR over cells with positive
  // weight, or the nearest cell's flag on the terminal slice.
  double blend(double e1, double t1, bool terminal, std::uint8_t& flag) const {
    const std::size_t ne = g_.ne(), nt = g_.nt();
    double we, wt;
    const std::size_t i0 = ax_e_.lower(e1, we), j0 = ax_t_.lower(t1, wt);
    const std::size_t i1 = std::min(i0 + 1, ne - 1), j1 = std::min(j0 + 1, nt - 1);
    const std::size_t c00 = i0 * nt + j0, c01 = i0 * nt + j1, c10 = i1 * nt + j0, c11 = i1 * nt + j1;
    if (terminal) {
      flag = next_pen_[ax_e_.nearest(e1) * nt + ax_t_.nearest(t1)];
    } else {
      const bool up_e = we > 0.0, up_t = wt > 0.0;
      flag = next_pen_[c00] | (up_t && next_pen_[c01]) | (up_e && next_pen_[c10]) | (up_e && up_t && next_pen_[c11]);
    }
    return (1.0 - we) * ((1.0 - wt) * next_cost_[c00] + wt * next_cost_[c01]) +
           we * ((1.0 - wt) * next_cost_[c10] + wt * next_cost_[c11]);
  }

  int n_ = 0;
  PricePair price_{0.0, 0.0};
  const double* next_cost_ = nullptr;
  const std::uint8_t* next_pen_ = nullptr;
  std::vector<double> p_abs_, de_, q_, de_abs_, th_, dth_, cyc_, je_, cached_;
  std::vector<std::uint8_t> ok_, flag_, valid_;
  ThermalWorkspace ws_;
};

} // namespace

void backward_induction(const Scenario& s, DdpGrids& g, const PlantModels& models, const SolveOptions& opt) {
  const std::size_t ne = g.ne(), nt = g.nt();
  const double dt = s.grid.dt_minutes();
  const double scale = models.aging.cost_scale();

  std::vector<double> cal(ne * nt);
  std::vector<EcmPoint> ecm(ne * nt);
  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t j = 0; j < nt; ++j) {
      const BatteryState st{g.e_d[i], g.theta_d[j]};
      cal[i * nt + j] = calendar_fade(models.aging, st, s.soh0, dt) * scale;
      ecm[i * nt + j] = lookup(models.ecm, st);
    }

  ActionEvaluator ev(s, g, models, opt);
  const std::size_t na = ev.actions();
  std::vector<double> de(ne * nt * na), dth(ne * nt * na), cyc(ne * nt * na);
  std::vector<std::uint8_t> ok(ne * nt * na);
  std::vector<PowerBounds> pb(ne * nt);
  for (std::size_t c = 0; c < ne * nt; ++c) {
    const BatteryState st{g.e_d[c / nt], g.theta_d[c % nt]};
    ev.dynamics(st, ecm[c], &de[c * na], &dth[c * na], &ok[c * na]);
    ev.cyclic(&de[c * na], &cyc[c * na]);
    pb[c] = bounds_at(s, opt.derating, st);
  }

  const bool landing = s.lookup == CostLookup::interpolate;
  for (int n = g.intervals - 1; n >= 0; --n) {
    ev.set_slice(n);
    for (std::size_t i = 0; i < ne; ++i) {
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t c = i * nt + j;
        const std::size_t best = ev.score({g.e_d[i], g.theta_d[j]}, &de[c * na], &dth[c * na], &ok[c * na],
                                          &cyc[c * na], pb[c], cal[c]);
        const std::size_t idx = g.index(n, i, j);
        g.cost[idx] = ev.cost(best);
        g.penalty[idx] = ev.flagged(best);
        g.action[idx] = g.p_d[best];
        if (landing && n + 1 == g.intervals)
          if (const auto l = ev.landing({g.e_d[i], g.theta_d[j]}, ecm[c], cal[c]); l && l->second < g.cost[idx]) {
            g.cost[idx] = l->second;
            g.penalty[idx] = 0;
            g.action[idx] = l->first;
          }
      }
    }
  }
}

DdpSolution forward_integration(const Scenario& s, const DdpGrids& g, const PlantModels& models,
                                const SolveOptions& opt) {
  const int N = g.intervals;
  DdpSolution sol;
  sol.p_star.assign(N, 0.0);
  sol.j_e.assign(N, 0.0);
  sol.j_d.assign(N, 0.0);
  sol.e_traj.assign(N + 1, s.e0);
  sol.theta_traj.assign(N + 1, s.theta0);

  std::size_t i = nearest_index(g.e_d, s.e0);
  std::size_t j = nearest_index(g.theta_d, s.theta0);
  sol.objective = g.cost_at(0, i, j);
  BatteryState st{s.e0, s.theta0};
  const double dt = s.grid.dt_minutes();
  const bool lookahead = s.lookup == CostLookup::interpolate;
  // With lookahead the realized path decides feasibility; interpolated flags
  // are conservative next to the reachable set.
  sol.feasible = lookahead || !g.penalized(0, i, j);
  const double scale = models.aging.cost_scale();
  ActionEvaluator ev(s, g, models, opt);

  for (int n = 0; n < N; ++n) {
    const EcmPoint ecm = lookup(models.ecm, st);
    double p = g.action_at(n, i, j);
    if (lookahead) {
      ev.set_slice(n);
      const double jcal = calendar_fade(models.aging, st, s.soh0, dt) * scale;
      const std::size_t best = ev.evaluate(st, ecm, jcal);
      const auto exact = ev.landing(st, ecm, jcal);
      if (exact && (!ev.valid(best) || exact->second < ev.cost(best)))
        p = exact->first;
      else if (ev.valid(best))
        p = g.p_d[best];
      else
        sol.feasible = false;
    }
    if (ecm.u_ocv * ecm.u_ocv + (4.0 * ecm.r_i) * (p * 1000.0) < 0.0) {
      // Action not deliverable at the continuous state; hold from here.
      sol.feasible = false;
      for (int m = n + 1; m <= N; ++m) {
        sol.e_traj[m] = st.e;
        sol.theta_traj[m] = st.theta;
      }
      break;
    }
    const EnergyStep es = energy_step(ecm, p, dt);
    const double dth = models.thermal.predict(make_features(st, p, es.q_loss, es.delta_e));
    const PricePair price = price_at(s.profile, s.grid.instant(n));
    const double je = energy_cost(p, s.grid.dt_hours(), price);
    const AgingCost ac = aging_cost(models.aging, es.delta_e, st, s.soh0, dt);
    (p >= 0.0 ? sol.cost.j_e_buy : sol.cost.j_e_sell) += je;
    sol.cost.j_d_cyc += ac.j_cyc;
    sol.cost.j_d_cal += ac.j_cal;
    sol.p_star[n] = p;
    sol.j_e[n] = je;
    sol.j_d[n] = ac.j_cyc + ac.j_cal;
    st = {st.e + es.delta_e, st.theta + dth};
    sol.e_traj[n + 1] = st.e;
    sol.theta_traj[n + 1] = st.theta;
    i = nearest_index(g.e_d, st.e);
    j = nearest_index(g.theta_d, st.theta);
    if (lookahead) {
      if (!(s.e_lo <= st.e && st.e <= s.e_hi && s.theta_lo <= st.theta && st.theta <= s.theta_hi))
        sol.feasible = false;
      if (n + 1 == N && g.penalized(N, i, j)) sol.feasible = false;
    } else if (g.penalized(n + 1, i, j)) {
      sol.feasible = false;
    }
  }
  return sol;
}

DdpSolution solve(const Scenario& s, const PlantModels& models, const SolveOptions& opt) {
  DdpGrids g = build_grids(s);
  backward_induction(s, g, models, opt);
  return forward_integration(s, g, models, opt);
}

DdpSolution replay(std::span<const double> powers, const Scenario& s, const PlantModels& models) {
  s.validate();
  const int N = s.grid.intervals();
  if (powers.size() != static_cast<std::size_t>(N)) throw InvalidParameter("replay: power count != intervals");
  DdpSolution sol;
  sol.p_star.assign(powers.begin(), powers.end());
  sol.j_e.assign(N, 0.0);
  sol.j_d.assign(N, 0.0);
  sol.e_traj.assign(N + 1, s.e0);
  sol.theta_traj.assign(N + 1, s.theta0);
  BatteryState st{s.e0, s.theta0};
  const double dt = s.grid.dt_minutes();
  for (int n = 0; n < N; ++n) {
    const double p = powers[n];
    if (p < s.p_lo || p > s.p_hi) sol.within_bounds = false;
    const EnergyStep es = energy_step(models.ecm, st, p, dt);
    const double dth = models.thermal.predict(make_features(st, p, es.q_loss, es.delta_e));
    const PricePair price = price_at(s.profile, s.grid.instant(n));
    const double je = energy_cost(p, s.grid.dt_hours(), price);
    const AgingCost ac = aging_cost(models.aging, es.delta_e, st, s.soh0, dt);
    (p >= 0.0 ? sol.cost.j_e_buy : sol.cost.j_e_sell) += je;
    sol.cost.j_d_cyc += ac.j_cyc;
    sol.cost.j_d_cal += ac.j_cal;
    sol.j_e[n] = je;
    sol.j_d[n] = ac.j_cyc + ac.j_cal;
    st = {st.e + es.delta_e, st.theta + dth};
    if (st.e < s.e_lo || st.e > s.e_hi || st.theta < s.theta_lo || st.theta > s.theta_hi) sol.within_bounds = false;
    sol.e_traj[n + 1] = st.e;
    sol.theta_traj[n + 1] = st.theta;
  }
  sol.objective = sol.cost.total();
  return sol;
}

SnappedPath snapped_rollout(const Scenario& s, const DdpGrids& g, const PlantModels& models,
                            const SolveOptions& opt) {
  SnappedPath path;
  std::size_t i = nearest_index(g.e_d, s.e0);
  std::size_t j = nearest_index(g.theta_d, s.theta0);
  path.cells.emplace_back(i, j);
  for (int n = 0; n < g.intervals; ++n) {
    const double p = g.action_at(n, i, j);
    path.p.push_back(p);
    const Transition t = transition(s, models, n, {g.e_d[i], g.theta_d[j]}, p, opt.derating);
    if (!t.valid) {
      path.valid = false;
      break;
    }
    i = nearest_index(g.e_d, t.next.e);
    j = nearest_index(g.theta_d, t.next.theta);
    path.cells.emplace_back(i, j);
  }
  if (path.valid && g.penalized(g.intervals, i, j)) path.valid = false;
  return path;
}

void write_solution_csv(const std::filesystem::path& path, const Scenario& s, const DdpSolution& sol) {
  csv::Table t;
  t.header = {"n", "t_s", "p_kw", "e_kwh", "theta_c", "j_e_eur", "j_d_eur"};
  const int N = static_cast<int>(sol.p_star.size());
  for (int n = 0; n <= N; ++n) {
    const bool last = n == N;
    t.rows.push_back({csv::format(static_cast<long long>(n)),
                      csv::format(static_cast<long long>(s.grid.instant(n))),
                      csv::format(last ? 0.0 : sol.p_star[n]), csv::format(sol.e_traj[n]),
                      csv::format(sol.theta_traj[n]), csv::format(last ? 0.0 : sol.j_e[n]),
                      csv::format(last ? 0.0 : sol.j_d[n])});
  }
  csv::write(path, t);
}

} // namespace smartcharge
