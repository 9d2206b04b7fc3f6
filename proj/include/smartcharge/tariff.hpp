#pragma once

// Hour-of-day electricity price profiles for buying (eps_buy) and selling
// (eps_sell), built from a year of hourly market prices.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smartcharge {

struct PriceProfile {
  std::array<double, 24> eps_buy{};  // EUR/kWh
  std::array<double, 24> eps_sell{}; // EUR/kWh
  std::string label = "custom";

  static PriceProfile flat(double price, std::string label = "custom");
  void validate() const;
};

struct PricePair {
  double buy;
  double sell;
};

/// (raw + fee) * (1 + tax) per hour.
std::array<double, 24> supplement(std::span<const double, 24> raw, double fee = 0.188, double tax = 0.19);

/// One market price. t_s is the wall-clock time of the price's hour expressed
/// as seconds since 1970-01-01T00:00 of the same clock (no zone conversion).
struct MarketSample {
  std::int64_t t_s;
  double price; // EUR/kWh
};

/// Parses `YYYY-MM-DDTHH:MM[:SS]` with an optional `Z` or `+HH:MM` suffix.
/// The suffix is ignored: hours are taken as written.
std::int64_t parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t t_s);

/// Hour of day (0..23) and whether the day is Saturday or Sunday.
int hour_of_day(std::int64_t t_s) noexcept;
bool is_weekend(std::int64_t t_s) noexcept;

/// Per-hour means over Monday-Friday and Saturday-Sunday. eps_sell starts
/// equal to eps_buy. Throws InputError when an (hour, class) has no sample.
std::pair<PriceProfile, PriceProfile> average_profiles(std::span<const MarketSample> history);

/// Averages, then supplements the buy curve and copies it to the sell curve.
std::pair<PriceProfile, PriceProfile> characteristic_profiles(std::span<const MarketSample> history,
                                                              double fee = 0.188, double tax = 0.19);

/// eps_sell = gamma * eps_buy.
PriceProfile scale_gamma(const PriceProfile& profile, double gamma);

/// Prices of the hour containing t_s.
PricePair price_at(const PriceProfile& profile, std::int64_t t_s) noexcept;

/// Workday or weekend profile by the calendar day of t_s.
const PriceProfile& profile_for(const PriceProfile& workday, const PriceProfile& weekend, std::int64_t t_s) noexcept;

/// Mean of eps_buy over the 24 hours.
double mean_buy_price(const PriceProfile& profile) noexcept;

/// `timestamp_iso8601,price_eur_per_kwh`
std::vector<MarketSample> read_market_csv(const std::filesystem::path& path);
void write_market_csv(const std::filesystem::path& path, std::span<const MarketSample> history);

/// `hour,eps_buy,eps_sell`, 24 rows.
PriceProfile read_profile_csv(const std::filesystem::path& path, std::string label = "custom");
void write_profile_csv(const std::filesystem::path& path, const PriceProfile& profile);

/// Synthetic hourly day-ahead year with a two-peak daily shape, seasonal
/// swing and multiplicative noise; weekend hours are scaled by weekend_factor.
std::vector<MarketSample> synthetic_market_year(int year, std::uint64_t seed, double weekend_factor = 0.9);

} // namespace smartcharge
