#include <filesystem>
#include <random>

#include "doctest.h"
#include "smartcharge/core.hpp"
#include "smartcharge/error.hpp"

using namespace smartcharge;

namespace {

std::vector<RawSample> constant_series(double minutes, double step_min, double p) {
  std::vector<RawSample> s;
  for (double t = 0.0; t <= minutes + 1e-9; t += step_min) s.push_back({t * 60.0, p, 10.0 + t, 20.0, 380.0});
  return s;
}

} // namespace

TEST_CASE("time grid has N intervals and N+1 instants") {
  TimeGrid g(1000, 4, 5.0);
  CHECK(g.intervals() == 4);
  CHECK(g.instant(0) == 1000);
  CHECK(g.instant(4) == 1000 + 4 * 300);
  CHECK(g.duration_hours() == doctest::Approx(20.0 / 60.0));
  CHECK_THROWS_AS(TimeGrid(0, 0, 5.0), InvalidParameter);
  CHECK_THROWS_AS(TimeGrid(0, 3, 0.0), InvalidParameter);
}

TEST_CASE("soc") {
  CHECK(soc(40, 80) == 0.5);
  CHECK(soc(80, 80) == 1.0);
  CHECK(soc(8, 80) == doctest::Approx(0.1));
  CHECK_THROWS_AS(soc(1, 0), InvalidParameter);
  CHECK_THROWS_AS(soc(1, -5), InvalidParameter);
}

TEST_CASE("cost breakdown total is the sum of its components") {
  CostBreakdown c{3.0, -1.0, 0.5, 0.25};
  CHECK(c.total() == 2.75);
  CHECK(c.energy() == 2.0);
  CHECK(c.aging() == 0.75);
  c += CostBreakdown{1.0, 0.0, 0.0, 0.0};
  CHECK(c.j_e_buy == 4.0);
}

TEST_CASE("discretize constant signal") {
  const auto ev = discretize_event(constant_series(15, 1, 10.0), 5.0);
  REQUIRE(ev.grid.intervals() == 3);
  for (double p : ev.p) CHECK(p == doctest::Approx(10.0));
  CHECK(ev.e.size() == 4);
  CHECK(ev.theta.size() == 4);
  CHECK(ev.u_bat.size() == 4);
}

TEST_CASE("discretize piecewise constant aligned to the grid") {
  std::vector<RawSample> s;
  for (int m = 0; m <= 20; ++m) s.push_back({m * 60.0, m < 10 ? 0.0 : 12.0, 10.0, 20.0, 380.0});
  const auto ev = discretize_event(s, 5.0);
  REQUIRE(ev.grid.intervals() == 4);
  CHECK(ev.p[0] == doctest::Approx(0.0));
  CHECK(ev.p[1] == doctest::Approx(0.0));
  CHECK(ev.p[2] == doctest::Approx(12.0));
  CHECK(ev.p[3] == doctest::Approx(12.0));
}

TEST_CASE("discretize irregular samples with sample-and-hold time weighting") {
  std::vector<RawSample> s{{0, 0, 1, 20, 380}, {120, 6, 2, 21, 381}, {300, 6, 3, 22, 382},
                           {420, 12, 4, 23, 383}, {600, 12, 5, 24, 384}};
  const auto ev = discretize_event(s, 5.0);
  REQUIRE(ev.grid.intervals() == 2);
  CHECK(ev.p[0] == doctest::Approx((0.0 * 2 + 6.0 * 3) / 5));
  // 6 kW holds over [5, 7) min, 12 kW over [7, 10) min.
  CHECK(ev.p[1] == doctest::Approx((6.0 * 2 + 12.0 * 3) / 5));
  // Boundary states: last sample at or before the instant.
  CHECK(ev.e[0] == 1.0);
  CHECK(ev.e[1] == 3.0);
  CHECK(ev.e[2] == 5.0);
  CHECK(ev.theta[1] == 22.0);
}

TEST_CASE("discretize rejects bad input") {
  CHECK_THROWS_AS(discretize_event({}, 5.0), InputError);
  std::vector<RawSample> back{{0, 1, 1, 20, 380}, {600, 1, 1, 20, 380}, {300, 1, 1, 20, 380}};
  CHECK_THROWS_AS(discretize_event(back, 5.0), InputError);
  std::vector<RawSample> dup{{0, 1, 1, 20, 380}, {0, 1, 1, 20, 380}, {600, 1, 1, 20, 380}};
  CHECK_THROWS_AS(discretize_event(dup, 5.0), InputError);
  std::vector<RawSample> short_span{{0, 1, 1, 20, 380}, {200, 1, 1, 20, 380}};
  CHECK_THROWS_AS(discretize_event(short_span, 5.0), InputError);
}

TEST_CASE("event validation") {
  ChargingEvent ev = discretize_event(constant_series(10, 5, 3.0), 5.0);
  CHECK_NOTHROW(ev.validate());
  ev.soh0 = 1.2;
  CHECK_THROWS_AS(ev.validate(), InvalidParameter);
  ev.soh0 = 0.0;
  CHECK_THROWS_AS(ev.validate(), InvalidParameter);
  ev.soh0 = 1.0;
  ev.e.pop_back();
  CHECK_THROWS_AS(ev.validate(), InvalidParameter);
}

TEST_CASE("re-discretizing an aligned event is the identity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 40.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 7;
    ChargingEvent ev;
    ev.grid = TimeGrid(500, n, 5.0);
    ev.soh0 = 0.98;
    for (int k = 0; k < n; ++k) ev.p.push_back(u(rng));
    for (int k = 0; k <= n; ++k) {
      ev.e.push_back(40.0 + u(rng));
      ev.theta.push_back(u(rng));
      ev.u_bat.push_back(360.0 + u(rng));
    }
    const auto path = std::filesystem::temp_directory_path() / "sc_core_roundtrip.csv";
    write_event_csv(path, ev);
    const ChargingEvent back = read_event_csv(path, 5.0, 500, 0.98);
    REQUIRE(back.grid == ev.grid);
    CHECK(back.p == ev.p);
    CHECK(back.e == ev.e);
    CHECK(back.theta == ev.theta);
    CHECK(back.u_bat == ev.u_bat);
    std::filesystem::remove(path);
  }
}

TEST_CASE("event length invariants") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawSample> s;
    double t = 0.0;
    const int count = 2 + trial;
    for (int k = 0; k < count; ++k) {
      s.push_back({t, static_cast<double>(k % 5), 10.0, 20.0, 380.0});
      t += 30.0 + std::uniform_real_distribution<double>(0.0, 400.0)(rng);
    }
    if (s.back().t_s < 300.0) continue;
    const auto ev = discretize_event(s, 5.0);
    const auto n = static_cast<std::size_t>(ev.grid.intervals());
    CHECK(ev.p.size() == n);
    CHECK(ev.e.size() == n + 1);
    CHECK(ev.theta.size() == n + 1);
  }
}
