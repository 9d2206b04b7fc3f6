#include "smartcharge/cli.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "smartcharge/error.hpp"
#include "smartcharge/evaluation.hpp"
#include "smartcharge/tariff.hpp"

namespace smartcharge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void get_path(const json& j, const char* key, const fs::path& base, std::optional<fs::path>& out) {
  if (!j.contains(key)) return;
  const fs::path p = j.at(key).get<std::string>();
  out = p.is_absolute() ? p : base / p;
}

MlpOptimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return MlpOptimizer::adam;
  if (s == "sgd") return MlpOptimizer::sgd;
  throw InputError("config: unknown optimizer '" + s + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("write failed: " + path.string());
}

void ensure_out(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) throw InputError("output directory not writable: " + cfg.out.string());
}

json plant_json(const ThermalPlant& p) {
  return {{"c_th", p.c_th}, {"k_amb", p.k_amb}, {"theta_amb", p.theta_amb}, {"noise_sigma", p.noise_sigma},
          {"conv_ref_k", p.conv_ref_k}};
}

json options_json(const SyntheticOptions& o) {
  return {{"e_nom", o.e_nom},           {"dt_min", o.dt_min},       {"soc0_lo", o.soc0_lo},
          {"soc0_hi", o.soc0_hi},       {"target_lo", o.target_lo}, {"target_hi", o.target_hi},
          {"hours_lo", o.hours_lo},     {"hours_hi", o.hours_hi},   {"theta0_lo", o.theta0_lo},
          {"theta0_hi", o.theta0_hi},   {"soh0_lo", o.soh0_lo},     {"soh0_hi", o.soh0_hi},
          {"taper_soc", o.taper_soc},   {"taper_floor", o.taper_floor}, {"charger_kw", o.charger_kw},
          {"year_start_s", o.year_start_s}};
}

Scenario load_scenario(const RunConfig& cfg) { return cfg.scenario ? Scenario::load(*cfg.scenario) : Scenario{}; }

PlantModels load_models(const RunConfig& cfg) {
  PlantModels m;
  if (cfg.ecm) m.ecm = load_ecm_csv(*cfg.ecm);
  if (cfg.thermal_model) m.thermal = ThermalModel::load(*cfg.thermal_model);
  if (cfg.aging) m.aging = AgingParams::load(*cfg.aging);
  m.aging.validate();
  return m;
}

SolveOptions solve_options(const RunConfig& cfg) {
  SolveOptions o;
  if (cfg.isa == "scalar") o.kernels = &kernels::table(kernels::Isa::scalar);
  else if (cfg.isa == "avx2") o.kernels = &kernels::table(kernels::Isa::avx2);
  else if (cfg.isa != "auto") throw InputError("config: unknown isa '" + cfg.isa + "'");
  return o;
}

struct Prices {
  std::optional<PriceProfile> workday;
  std::optional<PriceProfile> weekend;

  // Profile for an event starting at t_s; the scenario's own when no source is configured.
  PriceProfile for_time(const PriceProfile& fallback, std::int64_t t_s) const {
    if (!workday) return fallback;
    return profile_for(*workday, weekend ? *weekend : *workday, t_s);
  }
};

Prices load_prices(const RunConfig& cfg) {
  Prices p;
  if (cfg.market_csv) {
    auto [w, we] = characteristic_profiles(read_market_csv(*cfg.market_csv));
    p.workday = w;
    p.weekend = we;
  } else if (cfg.profile_csv) {
    p.workday = read_profile_csv(*cfg.profile_csv, "workday");
    if (cfg.weekend_profile_csv) p.weekend = read_profile_csv(*cfg.weekend_profile_csv, "weekend");
  }
  return p;
}

// Scenario with the configured price source applied at its start time.
Scenario priced_scenario(const RunConfig& cfg) {
  Scenario s = load_scenario(cfg);
  s.profile = load_prices(cfg).for_time(s.profile, s.grid.t0());
  return s;
}

std::vector<ChargingEvent> load_corpus(const RunConfig& cfg) {
  if (!cfg.events_dir) throw InputError("config: events_dir is required for this command");
  const fs::path manifest = *cfg.events_dir / "manifest.json";
  std::ifstream f(manifest);
  if (!f) throw InputError("cannot read " + manifest.string());
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(manifest.string() + ": " + e.what());
  }
  const double dt = m.value("dt_min", 5.0);
  std::vector<ChargingEvent> events;
  for (const json& e : m.at("events"))
    events.push_back(read_event_csv(*cfg.events_dir / e.at("file").get<std::string>(), dt,
                                    e.at("t0_s").get<std::int64_t>(), e.at("soh0").get<double>()));
  if (events.empty()) throw InputError(manifest.string() + ": no events");
  return events;
}

std::vector<std::size_t> limit(std::vector<std::size_t> ids, std::size_t max_events) {
  if (max_events > 0 && ids.size() > max_events) ids.resize(max_events);
  return ids;
}

json cost_json(const DdpSolution& sol, const Scenario& s) {
  return {{"feasible", sol.feasible},
          {"objective", sol.objective},
          {"j_e_buy", sol.cost.j_e_buy},
          {"j_e_sell", sol.cost.j_e_sell},
          {"j_d_cyc", sol.cost.j_d_cyc},
          {"j_d_cal", sol.cost.j_d_cal},
          {"total", sol.cost.total()},
          {"e_final_kwh", sol.e_traj.back()},
          {"e_target_kwh", s.e_target},
          {"discharging_intervals", count_discharging(sol)}};
}

} // namespace

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    get_to(j, "seed", c.seed);
    if (j.contains("out")) {
      const fs::path p = j.at("out").get<std::string>();
      c.out = p.is_absolute() ? p : base_dir / p;
    }
    get_path(j, "scenario", base_dir, c.scenario);
    get_path(j, "aging", base_dir, c.aging);
    get_path(j, "ecm", base_dir, c.ecm);
    get_path(j, "thermal_model", base_dir, c.thermal_model);
    get_path(j, "events_dir", base_dir, c.events_dir);
    get_path(j, "market_csv", base_dir, c.market_csv);
    get_path(j, "profile_csv", base_dir, c.profile_csv);
    get_path(j, "weekend_profile_csv", base_dir, c.weekend_profile_csv);

    if (j.contains("synthetic")) {
      const json& s = j.at("synthetic");
      get_to(s, "n_events", c.synthetic.n_events);
      if (s.contains("plant")) {
        const json& p = s.at("plant");
        get_to(p, "c_th", c.synthetic.plant.c_th);
        get_to(p, "k_amb", c.synthetic.plant.k_amb);
        get_to(p, "theta_amb", c.synthetic.plant.theta_amb);
        get_to(p, "noise_sigma", c.synthetic.plant.noise_sigma);
        get_to(p, "conv_ref_k", c.synthetic.plant.conv_ref_k);
      }
      if (s.contains("options")) {
        const json& o = s.at("options");
        SyntheticOptions& so = c.synthetic.options;
        get_to(o, "e_nom", so.e_nom);
        get_to(o, "dt_min", so.dt_min);
        get_to(o, "soc0_lo", so.soc0_lo);
        get_to(o, "soc0_hi", so.soc0_hi);
        get_to(o, "target_lo", so.target_lo);
        get_to(o, "target_hi", so.target_hi);
        get_to(o, "hours_lo", so.hours_lo);
        get_to(o, "hours_hi", so.hours_hi);
        get_to(o, "theta0_lo", so.theta0_lo);
        get_to(o, "theta0_hi", so.theta0_hi);
        get_to(o, "soh0_lo", so.soh0_lo);
        get_to(o, "soh0_hi", so.soh0_hi);
        get_to(o, "taper_soc", so.taper_soc);
        get_to(o, "taper_floor", so.taper_floor);
        get_to(o, "charger_kw", so.charger_kw);
        get_to(o, "year_start_s", so.year_start_s);
      }
    }

    if (j.contains("fit")) {
      const json& f = j.at("fit");
      get_to(f, "screen_threshold", c.fit.screen_threshold);
      get_to(f, "folds", c.fit.folds);
      MlpArchitecture base;
      get_to(f, "epochs", base.epochs);
      get_to(f, "learning_rate", base.learning_rate);
      get_to(f, "batch_size", base.batch_size);
      if (f.contains("optimizer")) base.optimizer = optimizer_from_string(f.at("optimizer").get<std::string>());
      if (f.contains("grid")) {
        c.fit.grid.clear();
        for (const json& g : f.at("grid")) {
          MlpArchitecture a = base;
          a.hidden_layers = g.at("hidden_layers").get<int>();
          a.neurons = g.at("neurons").get<int>();
          c.fit.grid.push_back(a);
        }
      } else {
        c.fit.grid = default_mlp_grid(base);
      }
    }

    if (j.contains("validate_models"))
      for (const auto& [name, path] : j.at("validate_models").items()) {
        const fs::path p = path.get<std::string>();
        c.validate_models[name] = p.is_absolute() ? p : base_dir / p;
      }

    get_to(j, "gamma", c.gamma);
    get_to(j, "v_ev", c.v_ev);
    get_to(j, "reoptimize", c.reoptimize);
    get_to(j, "max_events", c.max_events);
    get_to(j, "isa", c.isa);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

int cmd_gen_synthetic(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const EcmTables ecm = cfg.ecm ? load_ecm_csv(*cfg.ecm) : EcmTables::defaults();
  const auto events =
      generate_synthetic_events(cfg.synthetic.plant, ecm, cfg.synthetic.n_events, cfg.seed, cfg.synthetic.options);
  fs::create_directories(cfg.out / "events");
  json list = json::array();
  for (std::size_t i = 0; i < events.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "events/event_%04zu.csv", i);
    write_event_csv(cfg.out / name, events[i]);
    list.push_back({{"file", name},
                    {"t0_s", events[i].grid.t0()},
                    {"soh0", events[i].soh0},
                    {"intervals", events[i].grid.intervals()}});
  }
  const json manifest = {{"command", "gen-synthetic"},
                         {"seed", cfg.seed},
                         {"n_events", events.size()},
                         {"dt_min", cfg.synthetic.options.dt_min},
                         {"plant", plant_json(cfg.synthetic.plant)},
                         {"options", options_json(cfg.synthetic.options)},
                         {"events", list}};
  write_text(cfg.out / "manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << events.size() << " events to " << (cfg.out / "events").string() << "\n";
  return ok;
}

int cmd_fit_thermal(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const auto events = load_corpus(cfg);
  const EcmTables ecm = cfg.ecm ? load_ecm_csv(*cfg.ecm) : EcmTables::defaults();
  const ThermalFit fit = fit_thermal_pipeline(events, ecm, cfg.fit, cfg.seed);
  fit.mlp.save(cfg.out / "thermal_mlp.json");
  fit.linear.save(cfg.out / "thermal_linear.json");
  write_cv_table(cfg.out / "cv_table.csv", fit.search.cv_table);
  const MlpArchitecture& b = fit.search.best;
  const json summary = {{"command", "fit-thermal"},
                        {"seed", cfg.seed},
                        {"features", fit.features},
                        {"best_hidden_layers", b.hidden_layers},
                        {"best_neurons", b.neurons},
                        {"best_cv_rmse", fit.search.mean_rmse[fit.search.best_index]},
                        {"linear_cv_rmse", fit.linear_cv_rmse},
                        {"mean_cv_rmse", fit.search.mean_rmse}};
  write_text(cfg.out / "fit_summary.json", summary.dump(2) + "\n");
  log << "best architecture " << b.hidden_layers << "x" << b.neurons << ", cv rmse "
      << fit.search.mean_rmse[fit.search.best_index] << " K (linear " << fit.linear_cv_rmse << " K)\n";
  return ok;
}

int cmd_optimize(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const Scenario s = priced_scenario(cfg);
  const PlantModels models = load_models(cfg);
  const DdpSolution sol = solve(s, models, solve_options(cfg));
  write_solution_csv(cfg.out / "solution.csv", s, sol);
  write_text(cfg.out / "cost.json", cost_json(sol, s).dump(2) + "\n");
  if (!sol.feasible) {
    log << "infeasible: target " << s.e_target << " kWh not reached within bounds (final "
        << sol.e_traj.back() << " kWh, cost-to-go " << sol.objective << " EUR)\n";
    return infeasible;
  }
  log << "total cost " << sol.cost.total() << " EUR\n";
  return ok;
}

int cmd_compare_modes(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const auto events = load_corpus(cfg);
  const Scenario base = load_scenario(cfg);
  const Prices prices = load_prices(cfg);
  const PlantModels models = load_models(cfg);
  const SolveOptions opt = solve_options(cfg);
  std::vector<std::size_t> done;
  std::vector<ModeComparison> results;
  int code = ok;
  for (std::size_t id : limit(select_events(events), cfg.max_events)) {
    Scenario b = base;
    b.profile = prices.for_time(base.profile, events[id].grid.t0());
    try {
      ModeComparison mc = compare_modes(events[id], b, models, opt);
      if (!mc.mode[1].feasible || !mc.mode[2].feasible) {
        log << "event " << id << ": infeasible optimization\n";
        code = infeasible;
      }
      done.push_back(id);
      results.push_back(std::move(mc));
    } catch (const Error& e) {
      log << "event " << id << ": " << e.what() << "\n";
      if (code == ok) code = input_error;
    }
  }
  write_modes_csv(cfg.out / "modes.csv", done, results);
  log << "compared " << results.size() << " events\n";
  return code;
}

int cmd_sweep_gamma(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const Scenario s = priced_scenario(cfg);
  const SweepResult r = sweep_gamma(s, load_models(cfg), cfg.gamma, solve_options(cfg));
  write_sweep_csv(cfg.out / "sweep_gamma.csv", r);
  int code = ok;
  for (const SweepPoint& p : r.points) {
    log << "gamma " << p.axis_value << ": total " << p.cost.total() << " EUR, " << p.discharging_intervals
        << " discharging intervals\n";
    if (p.infeasible) code = infeasible;
  }
  return code;
}

int cmd_sweep_vev(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  std::vector<Scenario> scenarios;
  if (cfg.events_dir) {
    const auto events = load_corpus(cfg);
    const Scenario base = load_scenario(cfg);
    const Prices prices = load_prices(cfg);
    for (std::size_t id : limit(select_events(events), cfg.max_events)) {
      Scenario s = scenario_for_event(events[id], base);
      s.profile = prices.for_time(base.profile, events[id].grid.t0());
      scenarios.push_back(s);
    }
  } else {
    scenarios.push_back(priced_scenario(cfg));
  }
  const SweepResult r = sweep_battery_price(scenarios, load_models(cfg), cfg.v_ev, cfg.reoptimize,
                                            AgingParams{}.v_ev, solve_options(cfg));
  write_sweep_csv(cfg.out / "sweep_vev.csv", r);
  int code = ok;
  for (const SweepPoint& p : r.points) {
    log << "V_EV " << p.axis_value << ": total " << p.cost.total() << " EUR, aging " << p.cost.aging() << " EUR\n";
    if (p.infeasible) code = infeasible;
  }
  return code;
}

int cmd_validate(const RunConfig& cfg, std::ostream& log) {
  ensure_out(cfg);
  const auto events = load_corpus(cfg);
  const EcmTables ecm = cfg.ecm ? load_ecm_csv(*cfg.ecm) : EcmTables::defaults();
  std::vector<std::pair<std::string, ThermalModel>> owned;
  owned.emplace_back("constant", ThermalModel::constant());
  for (const auto& [name, path] : cfg.validate_models)
    if (name != "constant") owned.emplace_back(name, ThermalModel::load(path));
  std::vector<NamedThermalModel> named;
  for (const auto& [name, model] : owned) named.push_back({name, &model});
  const ValidationReport rep = validate_models(events, ecm, named, cfg.synthetic.options.e_nom);
  write_validation_csv(cfg.out / "validation.csv", rep);
  for (const ModelErrors& m : rep.models)
    log << m.model << ": local rmse " << m.local_rmse_theta << " K, global mae " << m.global_mae_theta << " K\n";
  return ok;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"smartcharge: EV charging optimization with battery aging and thermal models"};
  app.require_subcommand(1);
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  using Fn = int (*)(const RunConfig&, std::ostream&);
  const std::pair<const char*, Fn> commands[] = {
      {"gen-synthetic", cmd_gen_synthetic}, {"fit-thermal", cmd_fit_thermal}, {"optimize", cmd_optimize},
      {"compare-modes", cmd_compare_modes}, {"sweep-gamma", cmd_sweep_gamma}, {"sweep-vev", cmd_sweep_vev},
      {"validate", cmd_validate}};
  const char* help[] = {"generate a synthetic charging-event corpus", "train the thermal models on a corpus",
                        "solve one charging scenario", "compare operating modes over a corpus",
                        "sweep the sell/buy price ratio", "sweep the battery value", "score thermal models on a corpus"};
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < std::size(commands); ++k) {
    CLI::App* sub = app.add_subcommand(commands[k].first, help[k]);
    sub->add_option("--config", config, "run config JSON");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return input_error;
  }

  try {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    for (std::size_t k = 0; k < subs.size(); ++k)
      if (subs[k]->parsed()) return commands[k].second(cfg, out);
  } catch (const TrainingFailure& e) {
    err << "training failure: " << e.what() << "\n";
    return training_failure;
  } catch (const InfeasiblePower& e) {
    err << "infeasible: " << e.what() << "\n";
    return infeasible;
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  }
  return input_error;
}

} // namespace smartcharge::cli
