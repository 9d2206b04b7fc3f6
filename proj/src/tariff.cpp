#include "smartcharge/tariff.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"

namespace smartcharge {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw InputError("iso8601: truncated '" + std::string(s) + "'");
  int v = 0;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || p != s.data() + pos + len) throw InputError("iso8601: bad field in '" + std::string(s) + "'");
  return v;
}

} // namespace

PriceProfile PriceProfile::flat(double price, std::string label) {
  PriceProfile p;
  p.eps_buy.fill(price);
  p.eps_sell.fill(price);
  p.label = std::move(label);
  p.validate();
  return p;
}

void PriceProfile::validate() const {
  for (int h = 0; h < 24; ++h)
    if (!(eps_buy[h] >= 0.0) || !(eps_sell[h] >= 0.0) || !std::isfinite(eps_buy[h]) || !std::isfinite(eps_sell[h]))
      throw InvalidParameter("price profile: prices must be finite and >= 0");
}

std::array<double, 24> supplement(std::span<const double, 24> raw, double fee, double tax) {
  std::array<double, 24> out{};
  for (int h = 0; h < 24; ++h) {
    if (!(raw[h] >= 0.0)) throw InvalidParameter("supplement: negative market price");
    out[h] = (raw[h] + fee) * (1.0 + tax);
  }
  return out;
}

std::int64_t parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  const int y = parse_fixed(s, 0, 4);
  const int mo = parse_fixed(s, 5, 2);
  const int d = parse_fixed(s, 8, 2);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    throw InputError("iso8601: expected YYYY-MM-DDTHH:MM, got '" + std::string(s) + "'");
  const int hh = parse_fixed(s, 11, 2);
  const int mm = parse_fixed(s, 14, 2);
  int ss = 0;
  if (s.size() >= 19 && s[16] == ':') ss = parse_fixed(s, 17, 2);
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) throw InputError("iso8601: invalid date/time '" + std::string(s) + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kDay + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(std::int64_t t_s) {
  using namespace std::chrono;
  const std::int64_t days = floor_div(t_s, kDay);
  const std::int64_t sec = t_s - days * kDay;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(sec / 3600),
                static_cast<int>(sec % 3600 / 60), static_cast<int>(sec % 60));
  return buf;
}

int hour_of_day(std::int64_t t_s) noexcept {
  return static_cast<int>((t_s - floor_div(t_s, kDay) * kDay) / 3600);
}

bool is_weekend(std::int64_t t_s) noexcept {
  using namespace std::chrono;
  const weekday wd{sys_days{std::chrono::days{floor_div(t_s, kDay)}}};
  return wd == Saturday || wd == Sunday;
}

std::pair<PriceProfile, PriceProfile> average_profiles(std::span<const MarketSample> history) {
  std::array<double, 24> sum[2]{};
  std::array<int, 24> count[2]{};
  for (const MarketSample& s : history) {
    if (!(s.price >= 0.0)) throw InputError("market history: negative or NaN price");
    const int c = is_weekend(s.t_s) ? 1 : 0;
    const int h = hour_of_day(s.t_s);
    sum[c][h] += s.price;
    ++count[c][h];
  }
  PriceProfile out[2];
  for (int c = 0; c < 2; ++c) {
    for (int h = 0; h < 24; ++h) {
      if (count[c][h] == 0)
        throw InputError(std::string("market history: no ") + (c ? "weekend" : "workday") + " sample for hour " +
                         std::to_string(h));
      out[c].eps_buy[h] = sum[c][h] / count[c][h];
    }
    out[c].eps_sell = out[c].eps_buy;
  }
  out[0].label = "workday";
  out[1].label = "weekend";
  return {out[0], out[1]};
}

std::pair<PriceProfile, PriceProfile> characteristic_profiles(std::span<const MarketSample> history, double fee,
                                                              double tax) {
  auto [work, weekend] = average_profiles(history);
  for (PriceProfile* p : {&work, &weekend}) {
    p->eps_buy = supplement(p->eps_buy, fee, tax);
    p->eps_sell = p->eps_buy;
  }
  return {work, weekend};
}

PriceProfile scale_gamma(const PriceProfile& profile, double gamma) {
  if (!(gamma > 0.0)) throw InvalidParameter("scale_gamma: gamma must be > 0");
  PriceProfile out = profile;
  for (int h = 0; h < 24; ++h) out.eps_sell[h] = gamma * profile.eps_buy[h];
  return out;
}

PricePair price_at(const PriceProfile& profile, std::int64_t t_s) noexcept {
  const int h = hour_of_day(t_s);
  return {profile.eps_buy[h], profile.eps_sell[h]};
}

const PriceProfile& profile_for(const PriceProfile& workday, const PriceProfile& weekend, std::int64_t t_s) noexcept {
  return is_weekend(t_s) ? weekend : workday;
}

double mean_buy_price(const PriceProfile& profile) noexcept {
  double s = 0.0;
  for (double v : profile.eps_buy) s += v;
  return s / 24.0;
}

std::vector<MarketSample> read_market_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  t.expect_header({"timestamp_iso8601", "price_eur_per_kwh"});
  std::vector<MarketSample> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back({parse_iso8601(row[0]), csv::parse_double(row[1])});
  return out;
}

void write_market_csv(const std::filesystem::path& path, std::span<const MarketSample> history) {
  csv::Table t;
  t.header = {"timestamp_iso8601", "price_eur_per_kwh"};
  for (const MarketSample& s : history) t.rows.push_back({format_iso8601(s.t_s), csv::format(s.price)});
  csv::write(path, t);
}

PriceProfile read_profile_csv(const std::filesystem::path& path, std::string label) {
  const csv::Table t = csv::read(path);
  t.expect_header({"hour", "eps_buy", "eps_sell"});
  if (t.rows.size() != 24) throw InputError("profile csv: expected 24 rows in " + path.string());
  PriceProfile p;
  std::array<bool, 24> seen{};
  for (const auto& row : t.rows) {
    const long long h = csv::parse_int(row[0]);
    if (h < 0 || h > 23 || seen[h]) throw InputError("profile csv: bad or duplicate hour in " + path.string());
    seen[h] = true;
    p.eps_buy[h] = csv::parse_double(row[1]);
    p.eps_sell[h] = csv::parse_double(row[2]);
  }
  p.label = std::move(label);
  try {
    p.validate();
  } catch (const InvalidParameter& e) {
    throw InputError(e.what());
  }
  return p;
}

void write_profile_csv(const std::filesystem::path& path, const PriceProfile& profile) {
  csv::Table t;
  t.header = {"hour", "eps_buy", "eps_sell"};
  for (int h = 0; h < 24; ++h)
    t.rows.push_back({csv::format(static_cast<long long>(h)), csv::format(profile.eps_buy[h]),
                      csv::format(profile.eps_sell[h])});
  csv::write(path, t);
}

std::vector<MarketSample> synthetic_market_year(int year, std::uint64_t seed, double weekend_factor) {
  using namespace std::chrono;
  if (!(weekend_factor > 0.0)) throw InvalidParameter("synthetic market: weekend_factor must be > 0");
  // EUR/kWh, night trough, morning and evening peaks.
  static constexpr std::array<double, 24> shape{0.034, 0.031, 0.029, 0.028, 0.028, 0.031, 0.038, 0.047,
                                                0.052, 0.050, 0.047, 0.045, 0.043, 0.041, 0.040, 0.041,
                                                0.045, 0.051, 0.058, 0.060, 0.055, 0.048, 0.042, 0.037};
  const std::int64_t start = static_cast<std::int64_t>(sys_days{std::chrono::year{year} / January / 1}
                                                           .time_since_epoch()
                                                           .count()) *
                             kDay;
  const std::int64_t end = static_cast<std::int64_t>(sys_days{std::chrono::year{year + 1} / January / 1}
                                                         .time_since_epoch()
                                                         .count()) *
                           kDay;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.08);
  std::vector<MarketSample> out;
  out.reserve(static_cast<std::size_t>((end - start) / 3600));
  for (std::int64_t t = start; t < end; t += 3600) {
    const double day = static_cast<double>((t - start) / kDay);
    const double season = 1.0 + 0.12 * std::cos(2.0 * std::numbers::pi * day / 365.0);
    double price = shape[hour_of_day(t)] * season * (1.0 + noise(rng));
    if (is_weekend(t)) price *= weekend_factor;
    out.push_back({t, price > 0.0 ? price : 0.0});
  }
  return out;
}

} // namespace smartcharge
