#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "smartcharge/aging.hpp"
#include "smartcharge/error.hpp"

using namespace smartcharge;

TEST_CASE("default calibration") {
  const AgingParams p;
  CHECK(p.beta_c == doctest::Approx(0.025 / (std::exp(-5000.0 / 298.0 + 0.25) * std::sqrt(31536000.0))));
  CHECK(p.cost_scale() == doctest::Approx(30400.0));
  // One year at 25 degC and 40 kWh from a new battery: 2.5 % fade.
  CHECK(calendar_fade(p, {40.0, 25.0}, 1.0, 31536000.0 / 60.0) == doctest::Approx(0.025).epsilon(1e-12));
  // 20 % fade after 120 000 kWh of throughput.
  CHECK(cyclic_fade(p, 120000.0) == doctest::Approx(0.2).epsilon(1e-3));
}

TEST_CASE("parameter validation") {
  AgingParams p;
  CHECK_NOTHROW(p.validate());
  p.beta_f = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = AgingParams{};
  p.beta_f = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = AgingParams{};
  p.h_ev = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = AgingParams{};
  p.v_ev = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = AgingParams{};
  p.beta_a = -1e-9;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
}

TEST_CASE("soh state") {
  const SohState s = SohState::from_capacity(78.0, 80.0);
  CHECK(s.h0 == doctest::Approx(0.975));
  CHECK_THROWS_AS(SohState::from_capacity(81.0, 80.0), InvalidParameter);
}

TEST_CASE("cyclic fade") {
  const AgingParams p;
  CHECK(cyclic_fade(p, 0.0) == 0.0);
  CHECK(cyclic_fade(p, -3.0) == doctest::Approx(5.001e-6));
  CHECK(cyclic_fade(p, 2.921) == cyclic_fade(p, -2.921));
}

TEST_CASE("cyclic fade with unit exponent is additive over sub-intervals") {
  const AgingParams p;
  for (double de : {0.1, 1.0, 2.921, 4.0}) CHECK(cyclic_fade(p, de) == doctest::Approx(4 * cyclic_fade(p, de / 4)));
}

TEST_CASE("equivalent age") {
  const AgingParams p;
  CHECK(equivalent_age(p, {40.0, 25.0}, 1.0) == 0.0);
  const double a = equivalent_age(p, {40.0, 25.0}, 0.995);
  const double b = equivalent_age(p, {40.0, 25.0}, 0.98);
  CHECK(b / a == doctest::Approx(16.0));
  const double tau = equivalent_age(p, {40.0, 25.0}, 0.975);
  const double expected = std::pow(0.025 / (p.beta_c * std::exp(p.beta_d / 298.0 + 40.0 * p.beta_e)), 2.0);
  CHECK(tau == doctest::Approx(expected));
  CHECK(tau == doctest::Approx(31536000.0).epsilon(1e-9));
}

TEST_CASE("calendar fade") {
  const AgingParams p;
  CHECK(calendar_fade(p, {40.0, 25.0}, 0.98, 0.0) == 0.0);
  CHECK(calendar_fade(p, {8.0, -20.0}, 0.9, 0.0) == 0.0);
  CHECK(calendar_fade(p, {40.0, 25.0}, 1.0, 5.0) ==
        doctest::Approx(calendar_prefactor(p, {40.0, 25.0}) * std::sqrt(300.0)));
  CHECK(calendar_fade(p, {40.0, 35.0}, 0.99, 5.0) > calendar_fade(p, {40.0, 25.0}, 0.99, 5.0));
  CHECK(calendar_fade(p, {70.0, 25.0}, 0.99, 5.0) > calendar_fade(p, {40.0, 25.0}, 0.99, 5.0));
  // Older batteries fade more slowly under the square-root law.
  CHECK(calendar_fade(p, {40.0, 25.0}, 0.95, 5.0) < calendar_fade(p, {40.0, 25.0}, 0.99, 5.0));
}

TEST_CASE("calendar fade is additive when an interval is split") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> de(8.0, 80.0), dth(-25.0, 60.0), dh(0.8, 1.0), dt(0.0, 30.0);
  for (AgingParams p : {AgingParams{}, [] {
                          AgingParams q;
                          q.beta_f = 0.7;
                          return q;
                        }()}) {
    for (int k = 0; k < 500; ++k) {
      const BatteryState s{de(rng), dth(rng)};
      const double h0 = dh(rng), t1 = dt(rng), t2 = dt(rng);
      const double f1 = calendar_fade(p, s, h0, t1);
      const double f2 = calendar_fade(p, s, h0 - f1, t2);
      CHECK(std::abs(f1 + f2 - calendar_fade(p, s, h0, t1 + t2)) <= 1e-12);
    }
  }
}

TEST_CASE("fades are non-negative") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> de(-10.0, 10.0), e(0.0, 80.0), th(-25.0, 60.0), h(0.5, 1.0), t(0.0, 60.0);
  const AgingParams p;
  for (int k = 0; k < 1000; ++k) {
    CHECK(cyclic_fade(p, de(rng)) >= 0.0);
    CHECK(calendar_fade(p, {e(rng), th(rng)}, h(rng), t(rng)) >= 0.0);
  }
}

TEST_CASE("aging cost") {
  AgingParams p;
  const AgingCost zero = aging_cost(p, 0.0, {40.0, 25.0}, 0.99, 0.0);
  CHECK(zero.j_cyc == 0.0);
  CHECK(zero.j_cal == 0.0);
  const AgingCost c = aging_cost(p, -3.0, {40.0, 25.0}, 0.99, 5.0);
  CHECK(c.j_cyc == doctest::Approx(0.15203).epsilon(1e-4));
  CHECK(c.j_cal == doctest::Approx(calendar_fade(p, {40.0, 25.0}, 0.99, 5.0) * 30400.0));
  CHECK(c.j_cyc >= 0.0);
  CHECK(c.j_cal >= 0.0);
}

TEST_CASE("aging cost is linear in the battery value") {
  AgingParams p;
  const AgingCost base = aging_cost(p, 2.5, {50.0, 30.0}, 0.98, 5.0);
  for (double v : {0.0, 2770.0, 4470.0, 12160.0}) {
    p.v_ev = v;
    const AgingCost c = aging_cost(p, 2.5, {50.0, 30.0}, 0.98, 5.0);
    CHECK(c.j_cyc == doctest::Approx(base.j_cyc * v / 6080.0));
    CHECK(c.j_cal == doctest::Approx(base.j_cal * v / 6080.0));
  }
}

TEST_CASE("aging params json round trip") {
  AgingParams p;
  p.beta_a = 2.5e-6;
  p.v_ev = 4470.0;
  const AgingParams back = AgingParams::from_json(p.to_json());
  CHECK(back.beta_a == p.beta_a);
  CHECK(back.beta_c == p.beta_c);
  CHECK(back.v_ev == p.v_ev);
  CHECK(back.h_ev == p.h_ev);
  CHECK(p.to_json().find("v_ev_eur") != std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "sc_aging.json";
  p.save(path);
  CHECK(AgingParams::load(path).beta_a == p.beta_a);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(AgingParams::from_json("{\"beta_a\": \"x\"}"), InputError);
  CHECK_THROWS_AS(AgingParams::from_json("{\"beta_f\": 2.0}"), InvalidParameter);
}
