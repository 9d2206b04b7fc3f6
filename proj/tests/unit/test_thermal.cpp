#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "smartcharge/error.hpp"
#include "smartcharge/kernels.hpp"
#include "smartcharge/learning.hpp"
#include "smartcharge/thermal.hpp"

using namespace smartcharge;

namespace {

const std::vector<std::string> kNames{"p_abs_kw", "q_loss_kw", "delta_e_abs_kwh", "theta_c"};

ThermalPlant newton_plant(double c_th, double k_amb, double theta_amb) {
  ThermalPlant p;
  p.c_th = c_th;
  p.k_amb = k_amb;
  p.theta_amb = theta_amb;
  p.noise_sigma = 0.0;
  p.conv_ref_k = std::numeric_limits<double>::infinity();
  return p;
}

ThermalModel random_mlp(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<DenseLayer> layers;
  std::size_t n_in = 4;
  for (std::size_t width : {6, 5, 1}) {
    DenseLayer l{n_in, width, std::vector<double>(n_in * width), std::vector<double>(width)};
    for (auto& w : l.w) w = g(rng);
    for (auto& b : l.b) b = g(rng);
    layers.push_back(l);
    n_in = width;
  }
  return ThermalModel::mlp(kNames, {20.0, 0.5, 1.5, 20.0}, {12.0, 0.4, 1.0, 10.0}, layers);
}

} // namespace

TEST_CASE("make_features takes absolute power and throughput") {
  auto f = make_features({10.0, 20.0}, 0.0, 0.0, 0.0);
  CHECK(f.p_abs == 0.0);
  CHECK(f.theta == 20.0);
  f = make_features({10.0, 25.0}, -36.0, 1.05974, -3.08831);
  CHECK(f.p_abs == 36.0);
  CHECK(f.q_loss == 1.05974);
  CHECK(f.delta_e_abs == 3.08831);
  CHECK(f.theta == 25.0);
  f = make_features({10.0, 25.0}, 36.0, 0.94803, 2.92100);
  CHECK(f.p_abs == 36.0);
  CHECK(f.delta_e_abs == 2.92100);
}

TEST_CASE("feature names") {
  CHECK(thermal_feature_index("q_loss_kw") == 1);
  CHECK(thermal_feature_index("theta_c") == 3);
  CHECK_THROWS_AS(thermal_feature_index("speed"), InvalidParameter);
  CHECK(thermal_variant_from_string("mlp") == ThermalVariant::mlp);
  CHECK(to_string(ThermalVariant::linear) == "linear");
}

TEST_CASE("constant model predicts exactly zero") {
  const ThermalModel m = ThermalModel::constant();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int k = 0; k < 200; ++k) CHECK(m.predict({std::abs(u(rng)), std::abs(u(rng)), std::abs(u(rng)), u(rng)}) == 0.0);
}

TEST_CASE("bias-only linear model") {
  const ThermalModel m = ThermalModel::linear(kNames, {0, 0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0, 0}, 0.3);
  CHECK(m.predict({36, 1, 3, 25}) == doctest::Approx(0.3));
  CHECK(m.predict({0, 0, 0, -10}) == doctest::Approx(0.3));
}

TEST_CASE("linear model normalizes its inputs") {
  const ThermalModel m = ThermalModel::linear({"q_loss_kw"}, {1.0}, {2.0}, {4.0}, 0.5);
  CHECK(m.predict({0, 3.0, 0, 0}) == doctest::Approx(4.0 * (3.0 - 1.0) / 2.0 + 0.5));
  const auto [w, b] = m.raw_linear_coefficients();
  CHECK(w[0] == doctest::Approx(2.0));
  CHECK(b == doctest::Approx(-1.5));
}

TEST_CASE("mlp with zero weights predicts zero") {
  std::vector<DenseLayer> layers{{4, 3, std::vector<double>(12, 0.0), std::vector<double>(3, 0.0)},
                                 {3, 1, std::vector<double>(3, 0.0), std::vector<double>(1, 0.0)}};
  const ThermalModel m = ThermalModel::mlp(kNames, {0, 0, 0, 0}, {1, 1, 1, 1}, layers);
  CHECK(m.predict({36, 1, 3, 25}) == 0.0);
  CHECK(m.predict({0, 0, 0, -20}) == 0.0);
}

TEST_CASE("invalid models are rejected") {
  CHECK_THROWS_AS(ThermalModel::linear(kNames, {0, 0, 0, 0}, {1, 0, 1, 1}, {1, 1, 1, 1}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(ThermalModel::linear(kNames, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(ThermalModel::linear({"bogus"}, {0}, {1}, {1}, 0.0), InvalidParameter);
  std::vector<DenseLayer> two_out{{4, 2, std::vector<double>(8, 0.1), std::vector<double>(2, 0.0)}};
  CHECK_THROWS_AS(ThermalModel::mlp(kNames, {0, 0, 0, 0}, {1, 1, 1, 1}, two_out), InvalidParameter);
}

TEST_CASE("model json round trip agrees within 1e-12") {
  std::mt19937_64 rng(9);
  const ThermalModel m = random_mlp(rng);
  const auto path = std::filesystem::temp_directory_path() / "sc_model.json";
  m.save(path);
  const ThermalModel back = ThermalModel::load(path);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int k = 0; k < 100; ++k) {
    const ThermalFeatures f{u(rng), u(rng) / 20.0, u(rng) / 10.0, u(rng) - 10.0};
    CHECK(std::abs(m.predict(f) - back.predict(f)) <= 1e-12);
  }
  const ThermalModel lin = ThermalModel::linear(kNames, {1, 2, 3, 4}, {1, 2, 3, 4}, {0.1, -0.2, 0.3, 0.05}, 0.01);
  const ThermalModel lin2 = ThermalModel::from_json(lin.to_json());
  CHECK(std::abs(lin.predict({10, 1, 2, 20}) - lin2.predict({10, 1, 2, 20})) <= 1e-12);
  CHECK(ThermalModel::from_json(ThermalModel::constant().to_json()).variant() == ThermalVariant::constant);
  CHECK_THROWS_AS(ThermalModel::from_json("{\"variant\": \"tree\"}"), InputError);
  std::filesystem::remove(path);
}

TEST_CASE("batch prediction matches single prediction") {
  std::mt19937_64 rng(10);
  const ThermalModel m = random_mlp(rng);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  const std::size_t n = 29;
  std::vector<double> p(n), q(n), de(n), th(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = u(rng);
    q[i] = u(rng) / 20.0;
    de[i] = u(rng) / 10.0;
    th[i] = u(rng);
  }
  ThermalWorkspace ws;
  m.predict_batch({p, q, de, th}, out, kernels::table(kernels::Isa::scalar), ws);
  for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == m.predict({p[i], q[i], de[i], th[i]}));
  if (kernels::supported(kernels::Isa::avx2)) {
    std::vector<double> out2(n);
    m.predict_batch({p, q, de, th}, out2, kernels::table(kernels::Isa::avx2), ws);
    for (std::size_t i = 0; i < n; ++i) CHECK(out2[i] == doctest::Approx(out[i]).epsilon(1e-13).scale(1e-12));
  }
}

TEST_CASE("plant at equilibrium does not move") {
  const ThermalPlant p = newton_plant(0.12, 0.015, 15.0);
  CHECK(plant_step(p, {40.0, 15.0}, 0.0, 0.0, 5.0, 1u) == 0.0);
}

TEST_CASE("plant heating and Newton cooling") {
  CHECK(plant_step(newton_plant(0.01, 0.0, 20.0), {40.0, 20.0}, 36.0, 0.948, 5.0, 1u) ==
        doctest::Approx(0.948 / (12 * 0.01)));
  CHECK(plant_step(newton_plant(0.1, 0.02, 20.0), {40.0, 35.0}, 0.0, 0.0, 5.0, 1u) == doctest::Approx(-0.25));
}

TEST_CASE("convective term strengthens cooling away from ambient") {
  ThermalPlant p = newton_plant(0.1, 0.02, 20.0);
  const double newton = plant_step(p, {40.0, 35.0}, 0.0, 0.0, 5.0, 1u);
  p.conv_ref_k = 10.0;
  CHECK(plant_step(p, {40.0, 35.0}, 0.0, 0.0, 5.0, 1u) == doctest::Approx(newton * 2.5));
  CHECK(plant_step(p, {40.0, 5.0}, 0.0, 0.0, 5.0, 1u) == doctest::Approx(-newton * 2.5));
}

TEST_CASE("plant noise is deterministic per seed") {
  ThermalPlant p;
  CHECK(plant_step(p, {40.0, 25.0}, 11.0, 0.1, 5.0, 77u) == plant_step(p, {40.0, 25.0}, 11.0, 0.1, 5.0, 77u));
  CHECK(plant_step(p, {40.0, 25.0}, 11.0, 0.1, 5.0, 77u) != plant_step(p, {40.0, 25.0}, 11.0, 0.1, 5.0, 78u));
  ThermalPlant bad;
  bad.c_th = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = ThermalPlant{};
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("synthetic events are reproducible and respect their bounds") {
  const ThermalPlant plant;
  const EcmTables ecm = EcmTables::defaults();
  const auto a = generate_synthetic_events(plant, ecm, 1, 5);
  const auto b = generate_synthetic_events(plant, ecm, 1, 5);
  CHECK(a[0].p == b[0].p);
  CHECK(a[0].theta == b[0].theta);

  const auto corpus = generate_synthetic_events(plant, ecm, 279, 42);
  REQUIRE(corpus.size() == 279);
  for (const auto& ev : corpus) {
    CHECK(ev.grid.duration_hours() >= 2.0 - 1e-9);
    CHECK(ev.grid.duration_hours() <= 12.0 + 1e-9);
    CHECK(ev.e.front() >= 0.10 * 80.0 - 1e-9);
    CHECK(ev.e.front() <= 0.60 * 80.0 + 1e-9);
    CHECK(ev.e.back() <= 80.0 + 1e-9);
    for (std::size_t n = 0; n < ev.p.size(); ++n) {
      CHECK(ev.p[n] >= 0.0);
      CHECK(ev.e[n + 1] >= ev.e[n]);
    }
    CHECK_NOTHROW(ev.validate());
  }
}

TEST_CASE("plant heat conservation without noise or cooling") {
  const ThermalPlant plant = newton_plant(0.12, 0.0, 15.0);
  const EcmTables ecm = EcmTables::defaults();
  for (const auto& ev : generate_synthetic_events(plant, ecm, 10, 3)) {
    double heat = 0.0;
    for (std::size_t n = 0; n < ev.p.size(); ++n)
      heat += energy_step(ecm, {ev.e[n], ev.theta[n]}, ev.p[n], 5.0).q_loss * 5.0 / 60.0;
    CHECK(std::abs((ev.theta.back() - ev.theta.front()) * plant.c_th - heat) <= 1e-9);
  }
}

TEST_CASE("least squares on noiseless plant data identifies the heat capacity") {
  const ThermalPlant plant = newton_plant(0.12, 0.0, 15.0);
  const EcmTables ecm = EcmTables::defaults();
  const auto events = generate_synthetic_events(plant, ecm, 20, 8);
  const Dataset ds = build_thermal_dataset(events, ecm);
  const std::size_t q = 1;
  const Dataset only_q = ds.select_columns(std::span<const std::size_t>(&q, 1));
  const auto [w, b] = fit_linear(only_q).raw_linear_coefficients();
  const double expected = 5.0 / (60.0 * plant.c_th);
  CHECK(std::abs(w[0] - expected) <= 0.01 * expected);
  CHECK(std::abs(b) < 1e-6);
}
