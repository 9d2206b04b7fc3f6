#pragma once

// Domain types shared by all modules.
//
// Units are fixed project-wide: power in kW, energy in kWh, temperature in
// degrees Celsius, durations in minutes (seconds for timestamps), money in EUR.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace smartcharge {

/// Uniform discretization of a charging event into N intervals of dt minutes.
/// There are N+1 state instants t_0..t_N; interval n spans [t_n, t_{n+1}].
class TimeGrid {
public:
  TimeGrid(std::int64_t t0_s, int intervals, double dt_min = 5.0);

  std::int64_t t0() const noexcept { return t0_; }
  int intervals() const noexcept { return n_; }
  double dt_minutes() const noexcept { return dt_min_; }
  double dt_hours() const noexcept { return dt_min_ / 60.0; }
  double dt_seconds() const noexcept { return dt_min_ * 60.0; }
  double duration_hours() const noexcept { return n_ * dt_hours(); }

  /// Epoch time (s) of state instant k, k in [0, N].
  std::int64_t instant(int k) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
  std::int64_t t0_;
  int n_;
  double dt_min_;
};

struct BatteryState {
  double e = 0.0;     // kWh
  double theta = 25.0; // degC
};

/// One raw measurement sample; t_s is seconds since event start.
struct RawSample {
  double t_s = 0.0;
  double p_kw = 0.0;
  double e_kwh = 0.0;
  double theta_c = 0.0;
  double u_bat_v = 0.0;
};

/// Time-discretized record of one plug-in session.
/// p has N entries (mean gross power per interval); e, theta, u_bat have N+1.
struct ChargingEvent {
  TimeGrid grid{0, 1};
  std::vector<double> p;
  std::vector<double> e;
  std::vector<double> theta;
  std::vector<double> u_bat;
  double soh0 = 1.0;

  /// Throws InvalidParameter on inconsistent array lengths or soh0 outside (0, 1].
  void validate() const;
};

struct CostBreakdown {
  double j_e_buy = 0.0;  // energy expenses, >= 0
  double j_e_sell = 0.0; // energy rewards, <= 0
  double j_d_cyc = 0.0;
  double j_d_cal = 0.0;

  double energy() const noexcept { return j_e_buy + j_e_sell; }
  double aging() const noexcept { return j_d_cyc + j_d_cal; }
  double total() const noexcept { return j_e_buy + j_e_sell + j_d_cyc + j_d_cal; }

  CostBreakdown& operator+=(const CostBreakdown& o) noexcept {
    j_e_buy += o.j_e_buy;
    j_e_sell += o.j_e_sell;
    j_d_cyc += o.j_d_cyc;
    j_d_cal += o.j_d_cal;
    return *this;
  }
};

/// State of charge e / e_nom.
double soc(double e_kwh, double e_nom_kwh);

/// Aggregates an irregular, time-ordered sample series onto a dt grid.
///
/// Power is treated as sample-and-hold (each sample's value holds until the
/// next sample) and averaged time-weighted over each interval. State values at
/// a boundary instant come from the last sample at or before that instant.
/// The number of intervals is floor(span / dt).
ChargingEvent discretize_event(std::span<const RawSample> samples, double dt_min,
                               std::int64_t t0_s = 0, double soh0 = 1.0);

/// Event CSV (`t_s,p_kw,e_kwh,theta_c,u_bat_v`), one row per raw sample.
std::vector<RawSample> read_event_samples(const std::filesystem::path& path);
ChargingEvent read_event_csv(const std::filesystem::path& path, double dt_min,
                             std::int64_t t0_s = 0, double soh0 = 1.0);

/// Writes a discretized event as N+1 aligned samples. Row n carries p_n, the
/// final row carries zero power; re-discretizing at the same dt is lossless.
void write_event_csv(const std::filesystem::path& path, const ChargingEvent& event);

} // namespace smartcharge
