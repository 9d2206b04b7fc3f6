#pragma once

// Per-interval battery temperature change. Three interchangeable predictors
// (constant, linear regression, sigmoid MLP) share one feature set and one
// file format; ThermalPlant is the synthetic ground truth used to generate
// training and validation corpora.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartcharge/core.hpp"
#include "smartcharge/electrical.hpp"
#include "smartcharge/kernels.hpp"

namespace smartcharge {

/// Model inputs per interval. Power and throughput enter as absolute values.
struct ThermalFeatures {
  double p_abs = 0.0;       // kW
  double q_loss = 0.0;      // kW
  double delta_e_abs = 0.0; // kWh
  double theta = 0.0;       // degC

  std::array<double, 4> as_array() const noexcept { return {p_abs, q_loss, delta_e_abs, theta}; }
};

/// Canonical feature names in ThermalFeatures order.
inline constexpr std::array<std::string_view, 4> kThermalFeatureNames{"p_abs_kw", "q_loss_kw", "delta_e_abs_kwh",
                                                                       "theta_c"};

/// Position of a canonical feature name; throws InvalidParameter if unknown.
std::size_t thermal_feature_index(std::string_view name);

ThermalFeatures make_features(const BatteryState& state, double p_kw, double q_loss_kw, double delta_e_kwh);

enum class ThermalVariant { constant, linear, mlp };

std::string_view to_string(ThermalVariant v) noexcept;
ThermalVariant thermal_variant_from_string(std::string_view s);

/// Fully connected layer, weights row-major [n_out][n_in].
struct DenseLayer {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  std::vector<double> w;
  std::vector<double> b;

  std::size_t parameter_count() const noexcept { return w.size() + b.size(); }
};

/// Column-major feature batch for vectorized prediction; all spans share a length.
struct FeatureColumns {
  std::span<const double> p_abs;
  std::span<const double> q_loss;
  std::span<const double> delta_e_abs;
  std::span<const double> theta;

  std::size_t size() const noexcept { return p_abs.size(); }
  std::span<const double> column(std::size_t canonical) const noexcept;
};

/// Scratch buffers reused across predict_batch calls.
struct ThermalWorkspace {
  std::vector<double> a;
  std::vector<double> b;
};

class ThermalModel {
public:
  /// Baseline that always predicts zero temperature change.
  static ThermalModel constant();
  /// Affine model w . z + bias on normalized features z = (x - mean) / std.
  static ThermalModel linear(std::vector<std::string> features, std::vector<double> means, std::vector<double> stds,
                             std::vector<double> weights, double bias);
  /// Sigmoid hidden layers, linear output unit (last layer must have one output).
  static ThermalModel mlp(std::vector<std::string> features, std::vector<double> means, std::vector<double> stds,
                          std::vector<DenseLayer> layers);

  ThermalVariant variant() const noexcept { return variant_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stds() const noexcept { return stds_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;

  /// Predicted delta theta (K). Evaluated through the scalar kernels, so the
  /// result is bit-identical to predict_batch with the scalar table.
  double predict(const ThermalFeatures& f) const;
  /// Raw (unnormalized) inputs given in feature_names() order.
  double predict_row(std::span<const double> x) const;
  void predict_batch(const FeatureColumns& cols, std::span<double> out, const kernels::KernelTable& kt,
                     ThermalWorkspace& ws) const;

  /// For linear models: coefficients on raw (unnormalized) inputs and the
  /// matching intercept.
  std::pair<std::vector<double>, double> raw_linear_coefficients() const;

  std::string to_json() const;
  static ThermalModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ThermalModel load(const std::filesystem::path& path);

private:
  ThermalModel() = default;
  void validate();
  template <class ColumnFn>
  void run(std::size_t n, ColumnFn column, double* out, const kernels::KernelTable& kt, ThermalWorkspace& ws) const;

  ThermalVariant variant_ = ThermalVariant::constant;
  std::vector<std::string> names_;
  std::vector<std::size_t> canonical_;
  std::vector<double> means_;
  std::vector<double> stds_;
  std::vector<DenseLayer> layers_;
};

/// Lumped single-node thermal plant: Ohmic heating against ambient cooling
/// that grows with the temperature difference,
///   dTheta = dt * (q_loss - k_amb * d * (1 + |d| / conv_ref_k)) / c_th + noise,
/// with d = theta - theta_amb. A conv_ref_k of infinity gives Newton cooling.
struct ThermalPlant {
  double c_th = 0.12;        // kWh/K
  double k_amb = 0.015;      // kW/K
  double theta_amb = 15.0;   // degC
  double noise_sigma = 0.05; // K
  double conv_ref_k = 10.0;  // K

  void validate() const;
};

double plant_step(const ThermalPlant& plant, const BatteryState& state, double p_kw, double q_loss_kw,
                  double dt_min, std::mt19937_64& rng);
double plant_step(const ThermalPlant& plant, const BatteryState& state, double p_kw, double q_loss_kw,
                  double dt_min, std::uint64_t seed);

struct SyntheticOptions {
  double e_nom = 80.0;
  double dt_min = 5.0;
  double soc0_lo = 0.10, soc0_hi = 0.60;
  double target_lo = 0.70, target_hi = 1.00;
  double hours_lo = 2.0, hours_hi = 12.0;
  double theta0_lo = 5.0, theta0_hi = 30.0;
  double soh0_lo = 0.97, soh0_hi = 0.995;
  double taper_soc = 0.8;
  double taper_floor = 0.15;
  std::vector<double> charger_kw{11.0, 22.0, 36.0, 50.0};
  std::int64_t year_start_s = 1514764800; // 2018-01-01T00:00:00Z
};

/// Uncoordinated charging sessions: full charger power from plug-in, linear
/// taper above taper_soc, stop at the target energy, idle until departure.
/// States are propagated through the ECM and the plant. Event i draws from
/// its own stream seeded by (seed, i).
std::vector<ChargingEvent> generate_synthetic_events(const ThermalPlant& plant, const EcmTables& tables,
                                                     int n_events, std::uint64_t seed,
                                                     const SyntheticOptions& options = {});

} // namespace smartcharge
