#include "smartcharge/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"

namespace smartcharge {

TimeGrid::TimeGrid(std::int64_t t0_s, int intervals, double dt_min) : t0_(t0_s), n_(intervals), dt_min_(dt_min) {
  if (intervals < 1) throw InvalidParameter("TimeGrid: need at least one interval");
  if (!(dt_min > 0.0) || !std::isfinite(dt_min)) throw InvalidParameter("TimeGrid: dt must be positive");
}

std::int64_t TimeGrid::instant(int k) const {
  if (k < 0 || k > n_) throw InvalidParameter("TimeGrid: instant index out of range");
  return t0_ + static_cast<std::int64_t>(std::llround(k * dt_seconds()));
}

void ChargingEvent::validate() const {
  const auto n = static_cast<std::size_t>(grid.intervals());
  if (p.size() != n) throw InvalidParameter("ChargingEvent: p must have N entries");
  if (e.size() != n + 1 || theta.size() != n + 1 || u_bat.size() != n + 1)
    throw InvalidParameter("ChargingEvent: e, theta and u_bat must have N+1 entries");
  if (!(soh0 > 0.0 && soh0 <= 1.0)) throw InvalidParameter("ChargingEvent: soh0 must lie in (0, 1]");
}

double soc(double e_kwh, double e_nom_kwh) {
  if (!(e_nom_kwh > 0.0)) throw InvalidParameter("soc: nominal capacity must be positive");
  return e_kwh / e_nom_kwh;
}

ChargingEvent discretize_event(std::span<const RawSample> samples, double dt_min, std::int64_t t0_s,
                               double soh0) {
  if (samples.empty()) throw InputError("discretize_event: no samples");
  if (!(dt_min > 0.0)) throw InvalidParameter("discretize_event: dt must be positive");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t_s > samples[i - 1].t_s))
      throw InputError("discretize_event: timestamps not strictly increasing at sample " + std::to_string(i));

  const double dt_s = dt_min * 60.0;
  const double t_first = samples.front().t_s;
  const double span = samples.back().t_s - t_first;
  const auto n = static_cast<int>(std::floor(span / dt_s + 1e-9));
  if (n < 1) throw InputError("discretize_event: samples span less than one interval");

  ChargingEvent ev;
  ev.grid = TimeGrid(t0_s, n, dt_min);
  ev.soh0 = soh0;
  ev.p.assign(n, 0.0);
  ev.e.resize(n + 1);
  ev.theta.resize(n + 1);
  ev.u_bat.resize(n + 1);

  // Boundary states: last sample at or before the instant.
  std::size_t cursor = 0;
  for (int k = 0; k <= n; ++k) {
    const double t = t_first + k * dt_s;
    while (cursor + 1 < samples.size() && samples[cursor + 1].t_s <= t + 1e-9) ++cursor;
    ev.e[k] = samples[cursor].e_kwh;
    ev.theta[k] = samples[cursor].theta_c;
    ev.u_bat[k] = samples[cursor].u_bat_v;
  }

  // Interval means of the sample-and-hold power signal.
  std::size_t i = 0;
  for (int k = 0; k < n; ++k) {
    const double a = t_first + k * dt_s;
    const double b = a + dt_s;
    while (i + 1 < samples.size() && samples[i + 1].t_s <= a) ++i;
    double mean = 0.0;
    for (std::size_t j = i; j < samples.size() && samples[j].t_s < b; ++j) {
      const double lo = std::max(a, samples[j].t_s);
      const double hi = j + 1 < samples.size() ? std::min(b, samples[j + 1].t_s) : b;
      if (hi > lo) mean += samples[j].p_kw * ((hi - lo) / dt_s);
    }
    ev.p[k] = mean;
  }
  ev.validate();
  return ev;
}

namespace {
const std::vector<std::string> kEventHeader{"t_s", "p_kw", "e_kwh", "theta_c", "u_bat_v"};
}

std::vector<RawSample> read_event_samples(const std::filesystem::path& path) {
  auto table = csv::read(path);
  table.expect_header(kEventHeader);
  std::vector<RawSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows)
    out.push_back({csv::parse_double(row[0]), csv::parse_double(row[1]), csv::parse_double(row[2]),
                   csv::parse_double(row[3]), csv::parse_double(row[4])});
  return out;
}

ChargingEvent read_event_csv(const std::filesystem::path& path, double dt_min, std::int64_t t0_s, double soh0) {
  auto samples = read_event_samples(path);
  return discretize_event(samples, dt_min, t0_s, soh0);
}

void write_event_csv(const std::filesystem::path& path, const ChargingEvent& event) {
  event.validate();
  csv::Table table;
  table.header = kEventHeader;
  const int n = event.grid.intervals();
  for (int k = 0; k <= n; ++k) {
    table.rows.push_back({csv::format(k * event.grid.dt_seconds()), csv::format(k < n ? event.p[k] : 0.0),
                          csv::format(event.e[k]), csv::format(event.theta[k]), csv::format(event.u_bat[k])});
  }
  csv::write(path, table);
}

} // namespace smartcharge
