#pragma once

// Training pipeline for the data-driven thermal models: rank-correlation
// screening, mean/variance normalization, least squares, a sigmoid MLP
// trained by mini-batch gradient descent, and k-fold grid search.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smartcharge/core.hpp"
#include "smartcharge/electrical.hpp"
#include "smartcharge/thermal.hpp"

namespace smartcharge {

/// Samples x features, row-major.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> feature_names;

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {x.data() + r * cols, cols}; }
  std::vector<double> column(std::size_t c) const;

  void validate() const;
  Dataset subset(std::span<const std::size_t> row_indices) const;
  Dataset select_columns(std::span<const std::size_t> col_indices) const;
};

/// One sample per interval of every event: features from the measured
/// start-of-interval state and power (Ohmic loss via the ECM, throughput as
/// measured), target theta_{n+1} - theta_n.
Dataset build_thermal_dataset(std::span<const ChargingEvent> events, const EcmTables& tables);

/// Pearson correlation of average ranks. Throws UndefinedCorrelation when
/// either input has zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

/// Keeps columns with |spearman(x_j, y)| >= threshold, in original order.
/// Constant columns count as zero correlation.
Dataset screen_features(const Dataset& ds, double threshold);

struct Normalizer {
  std::vector<double> means;
  std::vector<double> stds; // population standard deviation

  /// z = (x - mean) / std; zero-variance columns map to 0.
  Dataset apply(const Dataset& ds) const;
};

Normalizer fit_normalizer(const Dataset& ds);

/// Re-expresses a model fitted on normalized inputs as one that takes raw
/// inputs, folding the normalizer into the stored stats.
ThermalModel attach_normalizer(const ThermalModel& fitted_on_z, const Normalizer& norm);

/// Ordinary least squares with intercept via the normal equations. When the
/// normal matrix is near-singular a ridge term of 1e-8 is added, unless
/// allow_ridge is false, in which case InvalidParameter is thrown.
ThermalModel fit_linear(const Dataset& ds, bool allow_ridge = true);

enum class MlpOptimizer { sgd, adam };

struct MlpArchitecture {
  int hidden_layers = 2;
  int neurons = 10;
  double learning_rate = 0.001;
  int epochs = 500;
  int batch_size = 32;
  MlpOptimizer optimizer = MlpOptimizer::adam;

  void validate() const;
  std::size_t parameter_count(std::size_t n_inputs) const;
};

/// Feed-forward network with sigmoid hidden units and one linear output.
struct MlpNetwork {
  std::vector<DenseLayer> layers;

  static MlpNetwork xavier(std::size_t n_inputs, const MlpArchitecture& arch, std::uint64_t seed);

  double forward(std::span<const double> x) const;
  /// Mean squared error over the given rows (all rows when empty).
  double loss(const Dataset& ds, std::span<const std::size_t> rows = {}) const;
  /// Backpropagated gradient of loss() with respect to every weight and bias,
  /// shaped like `layers`. Returns the loss.
  double gradient(const Dataset& ds, std::span<const std::size_t> rows, std::vector<DenseLayer>& grad) const;
};

struct MlpTrainingLog {
  std::vector<double> epoch_loss; // mean batch loss per epoch
};

/// Trains on an already normalized dataset. Deterministic given the seed.
/// Throws TrainingFailure when the loss becomes non-finite.
ThermalModel fit_mlp(const Dataset& ds, const MlpArchitecture& arch, std::uint64_t seed,
                     MlpTrainingLog* log = nullptr);

/// Seeded shuffle split into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, int k, std::uint64_t seed);

struct CvRow {
  int hidden_layers;
  int neurons;
  int fold;
  double rmse_k;
};

struct GridSearchResult {
  MlpArchitecture best;
  std::size_t best_index = 0;
  std::vector<CvRow> cv_table;
  std::vector<double> mean_rmse; // per grid entry
};

/// Default grid: hidden layers {1,2,3} x neurons {5,10,20}.
std::vector<MlpArchitecture> default_mlp_grid(const MlpArchitecture& base = {});

/// Selects the architecture with the lowest mean validation RMSE. Entries
/// within tie_tolerance (relative) of the best count as tied; ties go to the
/// fewest parameters, then to the earliest grid entry.
GridSearchResult grid_search_cv(const Dataset& ds, std::span<const MlpArchitecture> grid, int k, std::uint64_t seed,
                                double tie_tolerance = 0.01);

void write_cv_table(const std::filesystem::path& path, std::span<const CvRow> rows);

struct ThermalFitOptions {
  double screen_threshold = 0.1;
  int folds = 5;
  std::vector<MlpArchitecture> grid = default_mlp_grid(); // searched on normalized features
};

struct ThermalFit {
  std::vector<std::string> features; // kept by screening
  ThermalModel mlp = ThermalModel::constant();
  ThermalModel linear = ThermalModel::constant();
  GridSearchResult search;
  double linear_cv_rmse = 0.0; // mean fold RMSE of least squares on the same partition
};

/// Screening, normalization, grid search and a final MLP fit on all samples,
/// plus least squares on the screened features. Both models take raw inputs.
ThermalFit fit_thermal_pipeline(std::span<const ChargingEvent> events, const EcmTables& tables,
                                const ThermalFitOptions& options, std::uint64_t seed);

double rmse(std::span<const double> pred, std::span<const double> actual);
double mae(std::span<const double> pred, std::span<const double> actual);

} // namespace smartcharge
