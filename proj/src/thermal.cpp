#include "smartcharge/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "smartcharge/error.hpp"

namespace smartcharge {

using nlohmann::json;

std::size_t thermal_feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kThermalFeatureNames.size(); ++i)
    if (kThermalFeatureNames[i] == name) return i;
  throw InvalidParameter("thermal: unknown feature '" + std::string(name) + "'");
}

ThermalFeatures make_features(const BatteryState& state, double p_kw, double q_loss_kw, double delta_e_kwh) {
  return {std::abs(p_kw), q_loss_kw, std::abs(delta_e_kwh), state.theta};
}

std::string_view to_string(ThermalVariant v) noexcept {
  switch (v) {
  case ThermalVariant::constant:
    return "constant";
  case ThermalVariant::linear:
    return "linear";
  case ThermalVariant::mlp:
    return "mlp";
  }
  return "constant";
}

ThermalVariant thermal_variant_from_string(std::string_view s) {
  if (s == "constant") return ThermalVariant::constant;
  if (s == "linear") return ThermalVariant::linear;
  if (s == "mlp") return ThermalVariant::mlp;
  throw InputError("thermal: unknown model variant '" + std::string(s) + "'");
}

std::span<const double> FeatureColumns::column(std::size_t canonical) const noexcept {
  switch (canonical) {
  case 0:
    return p_abs;
  case 1:
    return q_loss;
  case 2:
    return delta_e_abs;
  default:
    return theta;
  }
}

ThermalModel ThermalModel::constant() { return ThermalModel(); }

ThermalModel ThermalModel::linear(std::vector<std::string> features, std::vector<double> means,
                                  std::vector<double> stds, std::vector<double> weights, double bias) {
  ThermalModel m;
  m.variant_ = ThermalVariant::linear;
  m.names_ = std::move(features);
  m.means_ = std::move(means);
  m.stds_ = std::move(stds);
  DenseLayer layer;
  layer.n_in = weights.size();
  layer.n_out = 1;
  layer.w = std::move(weights);
  layer.b = {bias};
  m.layers_.push_back(std::move(layer));
  m.validate();
  return m;
}

ThermalModel ThermalModel::mlp(std::vector<std::string> features, std::vector<double> means,
                               std::vector<double> stds, std::vector<DenseLayer> layers) {
  ThermalModel m;
  m.variant_ = ThermalVariant::mlp;
  m.names_ = std::move(features);
  m.means_ = std::move(means);
  m.stds_ = std::move(stds);
  m.layers_ = std::move(layers);
  m.validate();
  return m;
}

void ThermalModel::validate() {
  canonical_.clear();
  if (variant_ == ThermalVariant::constant) {
    if (!layers_.empty()) throw InvalidParameter("thermal: constant model carries no layers");
    return;
  }
  if (names_.empty()) throw InvalidParameter("thermal: model needs at least one feature");
  if (means_.size() != names_.size() || stds_.size() != names_.size())
    throw InvalidParameter("thermal: normalization stats do not match the feature list");
  for (double s : stds_)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("thermal: normalization std must be positive");
  for (const auto& n : names_) canonical_.push_back(thermal_feature_index(n));
  if (layers_.empty()) throw InvalidParameter("thermal: model has no layers");
  if (variant_ == ThermalVariant::linear && layers_.size() != 1)
    throw InvalidParameter("thermal: linear model has exactly one layer");
  std::size_t width = names_.size();
  for (const auto& l : layers_) {
    if (l.n_in != width || l.w.size() != l.n_in * l.n_out || l.b.size() != l.n_out || l.n_out == 0)
      throw InvalidParameter("thermal: inconsistent layer shapes");
    width = l.n_out;
  }
  if (width != 1) throw InvalidParameter("thermal: output layer must have one unit");
}

std::size_t ThermalModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

template <class ColumnFn>
void ThermalModel::run(std::size_t n, ColumnFn column, double* out, const kernels::KernelTable& kt,
                       ThermalWorkspace& ws) const {
  if (variant_ == ThermalVariant::constant) {
    std::fill(out, out + n, 0.0);
    return;
  }
  const std::size_t nf = names_.size();
  ws.a.resize(nf * n);
  for (std::size_t f = 0; f < nf; ++f) {
    const double* src = column(f);
    std::copy(src, src + n, ws.a.begin() + static_cast<std::ptrdiff_t>(f * n));
    kt.standardize(ws.a.data() + f * n, n, means_[f], stds_[f]);
  }
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const bool last = li + 1 == layers_.size();
    const auto act = last || variant_ == ThermalVariant::linear ? kernels::Activation::identity
                                                                 : kernels::Activation::sigmoid;
    ws.b.resize(l.n_out * n);
    kt.dense(l.w.data(), l.b.data(), l.n_out, l.n_in, ws.a.data(), n, ws.b.data(), act);
    std::swap(ws.a, ws.b);
  }
  std::copy(ws.a.begin(), ws.a.begin() + static_cast<std::ptrdiff_t>(n), out);
}

double ThermalModel::predict(const ThermalFeatures& f) const {
  if (variant_ == ThermalVariant::constant) return 0.0;
  const auto x = f.as_array();
  ThermalWorkspace ws;
  double out = 0.0;
  run(1, [&](std::size_t i) { return &x[canonical_[i]]; }, &out, kernels::detail::scalar_table, ws);
  return out;
}

double ThermalModel::predict_row(std::span<const double> x) const {
  if (variant_ == ThermalVariant::constant) return 0.0;
  if (x.size() != names_.size()) throw InvalidParameter("thermal: feature vector does not match the model");
  ThermalWorkspace ws;
  double out = 0.0;
  run(1, [&](std::size_t i) { return &x[i]; }, &out, kernels::detail::scalar_table, ws);
  return out;
}

void ThermalModel::predict_batch(const FeatureColumns& cols, std::span<double> out, const kernels::KernelTable& kt,
                                 ThermalWorkspace& ws) const {
  const std::size_t n = cols.size();
  if (out.size() != n || cols.q_loss.size() != n || cols.delta_e_abs.size() != n || cols.theta.size() != n)
    throw InvalidParameter("thermal: batch columns differ in length");
  if (n == 0) return;
  run(n, [&](std::size_t i) { return cols.column(canonical_[i]).data(); }, out.data(), kt, ws);
}

std::pair<std::vector<double>, double> ThermalModel::raw_linear_coefficients() const {
  if (variant_ != ThermalVariant::linear) throw InvalidParameter("thermal: not a linear model");
  const auto& l = layers_.front();
  std::vector<double> w(l.n_in);
  double b = l.b[0];
  for (std::size_t f = 0; f < l.n_in; ++f) {
    w[f] = l.w[f] / stds_[f];
    b -= w[f] * means_[f];
  }
  return {w, b};
}

std::string ThermalModel::to_json() const {
  json j;
  j["variant"] = std::string(to_string(variant_));
  j["feature_names"] = names_;
  j["means"] = means_;
  j["stds"] = stds_;
  json layers = json::array();
  for (const auto& l : layers_) {
    json rows = json::array();
    for (std::size_t o = 0; o < l.n_out; ++o)
      rows.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(o * l.n_in),
                                         l.w.begin() + static_cast<std::ptrdiff_t>((o + 1) * l.n_in)));
    layers.push_back({{"w", rows}, {"b", l.b}});
  }
  j["layers"] = layers;
  return j.dump(2);
}

ThermalModel ThermalModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("thermal model: ") + e.what());
  }
  try {
    ThermalModel m;
    m.variant_ = thermal_variant_from_string(j.at("variant").get<std::string>());
    if (m.variant_ == ThermalVariant::constant) return m;
    m.names_ = j.at("feature_names").get<std::vector<std::string>>();
    m.means_ = j.at("means").get<std::vector<double>>();
    m.stds_ = j.at("stds").get<std::vector<double>>();
    for (const auto& jl : j.at("layers")) {
      DenseLayer l;
      const auto rows = jl.at("w").get<std::vector<std::vector<double>>>();
      l.b = jl.at("b").get<std::vector<double>>();
      l.n_out = rows.size();
      l.n_in = rows.empty() ? 0 : rows.front().size();
      for (const auto& r : rows) {
        if (r.size() != l.n_in) throw InputError("thermal model: ragged weight matrix");
        l.w.insert(l.w.end(), r.begin(), r.end());
      }
      m.layers_.push_back(std::move(l));
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("thermal model: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw InputError(e.what());
  }
}

void ThermalModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("thermal model: cannot write " + path.string());
  out << to_json() << '\n';
}

ThermalModel ThermalModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("thermal model: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ThermalPlant::validate() const {
  if (!(c_th > 0.0)) throw InvalidParameter("plant: heat capacity must be positive");
  if (!(k_amb >= 0.0)) throw InvalidParameter("plant: ambient coupling must be non-negative");
  if (!(noise_sigma >= 0.0)) throw InvalidParameter("plant: noise sigma must be non-negative");
  if (!(conv_ref_k > 0.0)) throw InvalidParameter("plant: convection reference must be positive");
}

double plant_step(const ThermalPlant& plant, const BatteryState& state, double /*p_kw*/, double q_loss_kw,
                  double dt_min, std::mt19937_64& rng) {
  const double d = state.theta - plant.theta_amb;
  const double cooling = plant.k_amb * d * (1.0 + std::abs(d) / plant.conv_ref_k);
  double delta = (dt_min / 60.0) * (q_loss_kw - cooling) / plant.c_th;
  if (plant.noise_sigma > 0.0) delta += std::normal_distribution<double>(0.0, plant.noise_sigma)(rng);
  return delta;
}

double plant_step(const ThermalPlant& plant, const BatteryState& state, double p_kw, double q_loss_kw,
                  double dt_min, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return plant_step(plant, state, p_kw, q_loss_kw, dt_min, rng);
}

namespace {

// Largest power in [0, p_hi] whose step does not overshoot `remaining`.
double power_for_energy(const EcmPoint& ecm, double p_hi, double remaining, double dt_min) {
  double lo = 0.0, hi = p_hi;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (energy_step(ecm, mid, dt_min).delta_e <= remaining)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

} // namespace

std::vector<ChargingEvent> generate_synthetic_events(const ThermalPlant& plant, const EcmTables& tables,
                                                     int n_events, std::uint64_t seed,
                                                     const SyntheticOptions& opt) {
  plant.validate();
  if (n_events < 1) throw InvalidParameter("generate_synthetic_events: need at least one event");
  if (opt.charger_kw.empty()) throw InvalidParameter("generate_synthetic_events: no charger powers");
  std::vector<ChargingEvent> events;
  events.reserve(static_cast<std::size_t>(n_events));
  for (int idx = 0; idx < n_events; ++idx) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx)};
    std::mt19937_64 rng(seq);
    auto uniform = [&rng](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

    const int day = std::uniform_int_distribution<int>(0, 364)(rng);
    const int slot = std::uniform_int_distribution<int>(0, 287)(rng);
    const double soc0 = uniform(opt.soc0_lo, opt.soc0_hi);
    const double target = uniform(opt.target_lo, opt.target_hi) * opt.e_nom;
    const double hours = uniform(opt.hours_lo, opt.hours_hi);
    const double theta0 = uniform(opt.theta0_lo, opt.theta0_hi);
    const double soh0 = uniform(opt.soh0_lo, opt.soh0_hi);
    const double charger =
        opt.charger_kw[std::uniform_int_distribution<std::size_t>(0, opt.charger_kw.size() - 1)(rng)];

    const int min_n = static_cast<int>(std::ceil(opt.hours_lo * 60.0 / opt.dt_min - 1e-9));
    const int n = std::max(min_n, static_cast<int>(std::lround(hours * 60.0 / opt.dt_min)));
    ChargingEvent ev;
    ev.grid = TimeGrid(opt.year_start_s + day * 86400LL + slot * 300LL, n, opt.dt_min);
    ev.soh0 = soh0;
    ev.p.assign(n, 0.0);
    ev.e.resize(n + 1);
    ev.theta.resize(n + 1);
    ev.u_bat.resize(n + 1);
    BatteryState s{soc0 * opt.e_nom, theta0};
    for (int k = 0; k < n; ++k) {
      const EcmPoint ecm = lookup(tables, s);
      double p = 0.0;
      if (s.e < target) {
        const double frac = s.e / opt.e_nom;
        const double scale =
            frac > opt.taper_soc ? std::max(opt.taper_floor, (1.0 - frac) / (1.0 - opt.taper_soc)) : 1.0;
        p = charger * scale;
        if (s.e + energy_step(ecm, p, opt.dt_min).delta_e > target)
          p = power_for_energy(ecm, p, target - s.e, opt.dt_min);
      }
      const EnergyStep step = energy_step(ecm, p, opt.dt_min);
      ev.p[k] = p;
      ev.e[k] = s.e;
      ev.theta[k] = s.theta;
      ev.u_bat[k] = terminal_voltage(ecm, step.current);
      const double d_theta = plant_step(plant, s, p, step.q_loss, opt.dt_min, rng);
      s.e += step.delta_e;
      s.theta += d_theta;
    }
    ev.e[n] = s.e;
    ev.theta[n] = s.theta;
    ev.u_bat[n] = lookup(tables, s).u_ocv;
    ev.validate();
    events.push_back(std::move(ev));
  }
  return events;
}

} // namespace smartcharge
