#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "smartcharge/error.hpp"
#include "smartcharge/tariff.hpp"

using namespace smartcharge;

namespace {

// 2018-01-01 (a Monday) 00:00.
constexpr std::int64_t kMonday = 1514764800;

std::vector<MarketSample> constant_year(double price) {
  std::vector<MarketSample> h;
  for (int d = 0; d < 14; ++d)
    for (int hr = 0; hr < 24; ++hr) h.push_back({kMonday + d * 86400 + hr * 3600, price});
  return h;
}

} // namespace

TEST_CASE("supplement adds fee then tax") {
  std::array<double, 24> raw{};
  raw.fill(0.0);
  raw[5] = 0.05;
  const auto out = supplement(raw);
  CHECK(out[0] == doctest::Approx(0.22372));
  CHECK(out[5] == doctest::Approx(0.28322));
  const auto id = supplement(raw, 0.0, 0.0);
  CHECK(id[5] == 0.05);
  CHECK(id[0] == 0.0);
}

TEST_CASE("supplement is monotone") {
  std::array<double, 24> a{}, b{};
  for (int h = 0; h < 24; ++h) {
    a[h] = 0.01 * h;
    b[h] = a[h] + 0.001 * (h % 3);
  }
  const auto oa = supplement(a), ob = supplement(b);
  for (int h = 0; h < 24; ++h) CHECK(oa[h] <= ob[h]);
}

TEST_CASE("iso timestamps and calendar classes") {
  CHECK(parse_iso8601("2018-01-01T00:00:00") == kMonday);
  CHECK(parse_iso8601("2018-01-01T13:30:00Z") == kMonday + 13 * 3600 + 1800);
  CHECK(parse_iso8601("2018-01-01T13:30:00+01:00") == kMonday + 13 * 3600 + 1800);
  CHECK(format_iso8601(kMonday + 3600) == "2018-01-01T01:00:00");
  CHECK(parse_iso8601(format_iso8601(kMonday + 12345 * 60)) == kMonday + 12345 * 60);
  CHECK_THROWS_AS(parse_iso8601("2018-13-01T00:00:00"), InputError);
  CHECK_THROWS_AS(parse_iso8601("yesterday"), InputError);
  CHECK(hour_of_day(kMonday + 13 * 3600 + 59 * 60) == 13);
  CHECK_FALSE(is_weekend(kMonday));
  CHECK_FALSE(is_weekend(kMonday + 4 * 86400));
  CHECK(is_weekend(kMonday + 5 * 86400));
  CHECK(is_weekend(kMonday + 6 * 86400 + 86399));
  CHECK_FALSE(is_weekend(kMonday + 7 * 86400));
}

TEST_CASE("average of a constant history") {
  const auto [w, we] = average_profiles(constant_year(0.30));
  for (int h = 0; h < 24; ++h) {
    CHECK(w.eps_buy[h] == doctest::Approx(0.30));
    CHECK(we.eps_buy[h] == doctest::Approx(0.30));
    CHECK(w.eps_sell[h] == w.eps_buy[h]);
  }
  CHECK(w.label == "workday");
  CHECK(we.label == "weekend");
}

TEST_CASE("average per hour of day") {
  auto h = constant_year(0.1);
  h[12].price = 0.2;          // Monday 12:00
  h[24 + 12].price = 0.4;     // Tuesday 12:00
  for (auto& s : h)
    if (!is_weekend(s.t_s) && hour_of_day(s.t_s) == 12 && s.price == 0.1) s.price = 0.3;
  const auto [w, we] = average_profiles(h);
  CHECK(w.eps_buy[12] == doctest::Approx(0.3));
  CHECK(we.eps_buy[12] == doctest::Approx(0.1));
}

TEST_CASE("missing hour coverage is an error") {
  auto h = constant_year(0.2);
  std::erase_if(h, [](const MarketSample& s) { return is_weekend(s.t_s) && hour_of_day(s.t_s) == 3; });
  CHECK_THROWS_AS(average_profiles(h), InputError);
}

TEST_CASE("synthetic year with cheaper weekends") {
  const auto [w, we] = average_profiles(synthetic_market_year(2018, 3, 0.9));
  double rw = 0.0, rwe = 0.0;
  for (int h = 0; h < 24; ++h) {
    CHECK(we.eps_buy[h] / w.eps_buy[h] == doctest::Approx(0.9).epsilon(0.03));
    rw += w.eps_buy[h];
    rwe += we.eps_buy[h];
  }
  CHECK(rwe / rw == doctest::Approx(0.9).epsilon(0.01));
}

TEST_CASE("characteristic profiles are supplemented with sell equal to buy") {
  const auto year = synthetic_market_year(2018, 4);
  const auto [aw, awe] = average_profiles(year);
  const auto [w, we] = characteristic_profiles(year);
  const auto sw = supplement(aw.eps_buy);
  for (int h = 0; h < 24; ++h) {
    CHECK(w.eps_buy[h] == doctest::Approx(sw[h]));
    CHECK(w.eps_sell[h] == w.eps_buy[h]);
    CHECK(we.eps_sell[h] == we.eps_buy[h]);
  }
}

TEST_CASE("gamma scaling") {
  PriceProfile p = PriceProfile::flat(0.28322);
  p.eps_buy[7] = 0.4;
  p.eps_sell[7] = 0.4;
  const PriceProfile one = scale_gamma(p, 1.0);
  for (int h = 0; h < 24; ++h) CHECK(one.eps_sell[h] == p.eps_sell[h]);
  const PriceProfile g = scale_gamma(p, 1.8);
  CHECK(g.eps_sell[0] == doctest::Approx(0.50980).epsilon(1e-5));
  CHECK(g.eps_buy[0] == p.eps_buy[0]);
  const PriceProfile half = scale_gamma(p, 0.5);
  for (int h = 0; h < 24; ++h) CHECK(half.eps_sell[h] == doctest::Approx(0.5 * half.eps_buy[h]));
  CHECK_THROWS_AS(scale_gamma(p, 0.0), InvalidParameter);
}

TEST_CASE("prices are looked up at the hour containing the instant") {
  PriceProfile p = PriceProfile::flat(0.3);
  for (int h = 0; h < 24; ++h) {
    p.eps_buy[h] = 0.1 + 0.01 * h;
    p.eps_sell[h] = 0.05 + 0.01 * h;
  }
  p.eps_buy[0] = 0.25;
  CHECK(price_at(p, kMonday + 1800).buy == 0.25);
  CHECK(price_at(p, kMonday + 23 * 3600 + 59 * 60).buy == p.eps_buy[23]);
  // An interval starting at 13:58 is priced at hour 13.
  CHECK(price_at(p, kMonday + 13 * 3600 + 58 * 60).buy == p.eps_buy[13]);
  CHECK(price_at(p, kMonday + 13 * 3600 + 58 * 60).sell == p.eps_sell[13]);
  int breaks = 0;
  for (std::int64_t t = kMonday; t < kMonday + 86400; t += 60)
    if (price_at(p, t).buy != price_at(p, t + 60).buy) ++breaks;
  CHECK(breaks == 24);
}

TEST_CASE("profile selection and mean price") {
  const PriceProfile w = PriceProfile::flat(0.3, "workday"), we = PriceProfile::flat(0.2, "weekend");
  CHECK(&profile_for(w, we, kMonday) == &w);
  CHECK(&profile_for(w, we, kMonday + 5 * 86400) == &we);
  CHECK(mean_buy_price(w) == doctest::Approx(0.3));
}

TEST_CASE("profile validation") {
  PriceProfile p = PriceProfile::flat(0.3);
  p.eps_buy[3] = -0.1;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
}

TEST_CASE("csv round trips") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto year = synthetic_market_year(2019, 5);
  write_market_csv(dir / "sc_market.csv", year);
  const auto back = read_market_csv(dir / "sc_market.csv");
  REQUIRE(back.size() == year.size());
  for (std::size_t i = 0; i < year.size(); i += 97) {
    CHECK(back[i].t_s == year[i].t_s);
    CHECK(back[i].price == year[i].price);
  }
  PriceProfile p = scale_gamma(characteristic_profiles(year).first, 1.3);
  write_profile_csv(dir / "sc_profile.csv", p);
  const PriceProfile q = read_profile_csv(dir / "sc_profile.csv", "workday");
  CHECK(q.eps_buy == p.eps_buy);
  CHECK(q.eps_sell == p.eps_sell);
  CHECK(q.label == "workday");
  std::filesystem::remove(dir / "sc_market.csv");
  std::filesystem::remove(dir / "sc_profile.csv");
}
