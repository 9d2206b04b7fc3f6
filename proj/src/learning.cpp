#include "smartcharge/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "smartcharge/csv.hpp"
#include "smartcharge/error.hpp"

namespace smartcharge {

namespace {

constexpr double kRidge = 1e-8;

std::vector<std::string> model_names(const Dataset& ds) {
  if (!ds.feature_names.empty()) return ds.feature_names;
  if (ds.cols > kThermalFeatureNames.size()) throw InvalidParameter("learning: unnamed dataset has too many columns");
  std::vector<std::string> names;
  for (std::size_t c = 0; c < ds.cols; ++c) names.emplace_back(kThermalFeatureNames[c]);
  return names;
}

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

// Forward/backward buffers for one network, reused across samples.
class Backprop {
public:
  explicit Backprop(const MlpNetwork& net) : net_(net) {
    act_.resize(net.layers.size() + 1);
    delta_.resize(net.layers.size());
    act_[0].resize(net.layers.front().n_in);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      act_[l + 1].resize(net.layers[l].n_out);
      delta_[l].resize(net.layers[l].n_out);
    }
  }

  double forward(std::span<const double> x) {
    std::copy(x.begin(), x.end(), act_[0].begin());
    const std::size_t last = net_.layers.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
      const DenseLayer& L = net_.layers[l];
      const std::vector<double>& in = act_[l];
      std::vector<double>& out = act_[l + 1];
      for (std::size_t o = 0; o < L.n_out; ++o) {
        double acc = L.b[o];
        const double* w = L.w.data() + o * L.n_in;
        for (std::size_t f = 0; f < L.n_in; ++f) acc = acc + w[f] * in[f];
        out[o] = l == last ? acc : sigmoid(acc);
      }
    }
    return act_.back()[0];
  }

  // Adds d(scale * (yhat - y)^2)/dparams to grad; returns (yhat - y)^2.
  double accumulate(std::span<const double> x, double y, double scale, std::vector<DenseLayer>& grad) {
    const double err = forward(x) - y;
    const std::size_t last = net_.layers.size() - 1;
    delta_[last][0] = 2.0 * scale * err;
    for (std::size_t l = last + 1; l-- > 0;) {
      const DenseLayer& L = net_.layers[l];
      DenseLayer& G = grad[l];
      const std::vector<double>& in = act_[l];
      const std::vector<double>& d = delta_[l];
      for (std::size_t o = 0; o < L.n_out; ++o) {
        G.b[o] += d[o];
        double* g = G.w.data() + o * L.n_in;
        for (std::size_t f = 0; f < L.n_in; ++f) g[f] += d[o] * in[f];
      }
      if (l == 0) break;
      std::vector<double>& dp = delta_[l - 1];
      for (std::size_t f = 0; f < L.n_in; ++f) {
        double s = 0.0;
        for (std::size_t o = 0; o < L.n_out; ++o) s += L.w[o * L.n_in + f] * d[o];
        dp[f] = s * in[f] * (1.0 - in[f]);
      }
    }
    return err * err;
  }

private:
  const MlpNetwork& net_;
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> delta_;
};

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> g = layers;
  for (auto& L : g) {
    std::fill(L.w.begin(), L.w.end(), 0.0);
    std::fill(L.b.begin(), L.b.end(), 0.0);
  }
  return g;
}

template <class Fn>
void for_each_param(std::vector<DenseLayer>& a, std::vector<DenseLayer>& b, Fn fn) {
  for (std::size_t l = 0; l < a.size(); ++l) {
    for (std::size_t i = 0; i < a[l].w.size(); ++i) fn(a[l].w[i], b[l].w[i]);
    for (std::size_t i = 0; i < a[l].b.size(); ++i) fn(a[l].b[i], b[l].b[i]);
  }
}

MlpNetwork train_network(const Dataset& ds, const MlpArchitecture& arch, std::uint64_t seed, MlpTrainingLog* log) {
  arch.validate();
  ds.validate();
  if (ds.rows == 0 || ds.cols == 0) throw InvalidParameter("fit_mlp: empty dataset");

  MlpNetwork net = MlpNetwork::xavier(ds.cols, arch, seed);
  std::mt19937_64 shuffle_rng(derive_seed({seed, 0x5368756666ULL}));
  std::vector<std::size_t> order(ds.rows);
  std::iota(order.begin(), order.end(), 0);

  std::vector<DenseLayer> grad = zeros_like(net.layers);
  std::vector<DenseLayer> m = zeros_like(net.layers);
  std::vector<DenseLayer> v = zeros_like(net.layers);
  const double lr = arch.learning_rate;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;
  Backprop bp(net);
  const std::size_t bs = static_cast<std::size_t>(arch.batch_size);

  if (log) log->epoch_loss.clear();
  for (int epoch = 0; epoch < arch.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < ds.rows; start += bs) {
      const std::size_t end = std::min(ds.rows, start + bs);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& L : grad) {
        std::fill(L.w.begin(), L.w.end(), 0.0);
        std::fill(L.b.begin(), L.b.end(), 0.0);
      }
      double sq = 0.0;
      for (std::size_t k = start; k < end; ++k) sq += bp.accumulate(ds.row(order[k]), ds.y[order[k]], scale, grad);
      loss_sum += sq * scale;
      ++batches;

      if (arch.optimizer == MlpOptimizer::sgd) {
        for_each_param(net.layers, grad, [&](double& p, double& g) { p -= lr * g; });
      } else {
        beta1_t *= beta1;
        beta2_t *= beta2;
        const double c1 = 1.0 / (1.0 - beta1_t);
        const double c2 = 1.0 / (1.0 - beta2_t);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
          auto step = [&](std::vector<double>& p, std::vector<double>& g, std::vector<double>& mm,
                          std::vector<double>& vv) {
            for (std::size_t i = 0; i < p.size(); ++i) {
              mm[i] = beta1 * mm[i] + (1.0 - beta1) * g[i];
              vv[i] = beta2 * vv[i] + (1.0 - beta2) * g[i] * g[i];
              p[i] -= lr * (mm[i] * c1) / (std::sqrt(vv[i] * c2) + eps);
            }
          };
          step(net.layers[l].w, grad[l].w, m[l].w, v[l].w);
          step(net.layers[l].b, grad[l].b, m[l].b, v[l].b);
        }
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    if (!std::isfinite(epoch_loss)) throw TrainingFailure("fit_mlp: loss diverged", epoch);
    if (log) log->epoch_loss.push_back(epoch_loss);
  }
  return net;
}

} // namespace

std::vector<double> Dataset::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

void Dataset::validate() const {
  if (x.size() != rows * cols) throw InvalidParameter("dataset: x has wrong size");
  if (y.size() != rows) throw InvalidParameter("dataset: x and y row counts differ");
  if (!feature_names.empty() && feature_names.size() != cols)
    throw InvalidParameter("dataset: feature_names size mismatch");
  for (double v : x)
    if (std::isnan(v)) throw InvalidParameter("dataset: NaN feature");
  for (double v : y)
    if (std::isnan(v)) throw InvalidParameter("dataset: NaN target");
}

Dataset Dataset::subset(std::span<const std::size_t> row_indices) const {
  Dataset out;
  out.rows = row_indices.size();
  out.cols = cols;
  out.feature_names = feature_names;
  out.x.reserve(out.rows * cols);
  out.y.reserve(out.rows);
  for (std::size_t r : row_indices) {
    if (r >= rows) throw InvalidParameter("dataset: row index out of range");
    auto src = row(r);
    out.x.insert(out.x.end(), src.begin(), src.end());
    out.y.push_back(y[r]);
  }
  return out;
}

Dataset Dataset::select_columns(std::span<const std::size_t> col_indices) const {
  Dataset out;
  out.rows = rows;
  out.cols = col_indices.size();
  out.y = y;
  for (std::size_t c : col_indices) {
    if (c >= cols) throw InvalidParameter("dataset: column index out of range");
    if (!feature_names.empty()) out.feature_names.push_back(feature_names[c]);
  }
  out.x.reserve(rows * out.cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c : col_indices) out.x.push_back(at(r, c));
  return out;
}

Dataset build_thermal_dataset(std::span<const ChargingEvent> events, const EcmTables& tables) {
  Dataset ds;
  ds.cols = kThermalFeatureNames.size();
  for (auto n : kThermalFeatureNames) ds.feature_names.emplace_back(n);
  for (const ChargingEvent& ev : events) {
    ev.validate();
    const double dt = ev.grid.dt_minutes();
    for (std::size_t n = 0; n < ev.p.size(); ++n) {
      const BatteryState s{ev.e[n], ev.theta[n]};
      const EnergyStep step = energy_step(tables, s, ev.p[n], dt);
      const auto f = make_features(s, ev.p[n], step.q_loss, ev.e[n + 1] - ev.e[n]).as_array();
      ds.x.insert(ds.x.end(), f.begin(), f.end());
      ds.y.push_back(ev.theta[n + 1] - ev.theta[n]);
      ++ds.rows;
    }
  }
  return ds;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidParameter("spearman: length mismatch");
  if (x.size() < 2) throw InvalidParameter("spearman: need at least two samples");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean, b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("spearman: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Dataset screen_features(const Dataset& ds, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidParameter("screen_features: threshold outside [0, 1]");
  ds.validate();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < ds.cols; ++c) {
    double rho = 0.0;
    try {
      rho = spearman(ds.column(c), ds.y);
    } catch (const UndefinedCorrelation&) {
      rho = 0.0;
    }
    if (std::abs(rho) >= threshold) keep.push_back(c);
  }
  if (keep.empty()) throw InvalidParameter("screen_features: all features screened out");
  return ds.select_columns(keep);
}

Dataset Normalizer::apply(const Dataset& ds) const {
  if (means.size() != ds.cols || stds.size() != ds.cols) throw InvalidParameter("normalizer: column count mismatch");
  Dataset out = ds;
  for (std::size_t r = 0; r < ds.rows; ++r)
    for (std::size_t c = 0; c < ds.cols; ++c) {
      double& v = out.x[r * ds.cols + c];
      v = stds[c] > 0.0 ? (v - means[c]) / stds[c] : 0.0;
    }
  return out;
}

Normalizer fit_normalizer(const Dataset& ds) {
  ds.validate();
  if (ds.rows < 2) throw InvalidParameter("fit_normalizer: need at least two samples");
  Normalizer n;
  n.means.assign(ds.cols, 0.0);
  n.stds.assign(ds.cols, 0.0);
  const double rows = static_cast<double>(ds.rows);
  for (std::size_t c = 0; c < ds.cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r) s += ds.at(r, c);
    const double mean = s / rows;
    double ss = 0.0;
    for (std::size_t r = 0; r < ds.rows; ++r) {
      const double d = ds.at(r, c) - mean;
      ss += d * d;
    }
    n.means[c] = mean;
    n.stds[c] = std::sqrt(ss / rows);
  }
  return n;
}

ThermalModel attach_normalizer(const ThermalModel& fitted_on_z, const Normalizer& norm) {
  if (fitted_on_z.variant() == ThermalVariant::constant) return fitted_on_z;
  const auto& names = fitted_on_z.feature_names();
  if (norm.means.size() != names.size() || norm.stds.size() != names.size())
    throw InvalidParameter("attach_normalizer: column count mismatch");
  // A zero-variance column maps to z = 0 at its constant value, which a unit
  // scale around the mean reproduces.
  std::vector<double> stds = norm.stds;
  for (double& s : stds)
    if (!(s > 0.0)) s = 1.0;
  if (fitted_on_z.variant() == ThermalVariant::linear) {
    const DenseLayer& L = fitted_on_z.layers().front();
    return ThermalModel::linear(names, norm.means, stds, L.w, L.b[0]);
  }
  return ThermalModel::mlp(names, norm.means, stds, fitted_on_z.layers());
}

ThermalModel fit_linear(const Dataset& ds, bool allow_ridge) {
  ds.validate();
  const std::size_t d = ds.cols;
  if (ds.rows < d + 1) throw InvalidParameter("fit_linear: need more samples than features");
  const Eigen::Index m = static_cast<Eigen::Index>(d + 1);

  // Centering decouples the intercept and keeps the normal matrix well scaled.
  std::vector<double> mean(d, 0.0);
  double ymean = 0.0;
  for (std::size_t r = 0; r < ds.rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += ds.at(r, c);
    ymean += ds.y[r];
  }
  const double rows = static_cast<double>(ds.rows);
  for (double& v : mean) v /= rows;
  ymean /= rows;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m - 1, m - 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m - 1);
  Eigen::VectorXd xr(m - 1);
  for (std::size_t r = 0; r < ds.rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) xr[static_cast<Eigen::Index>(c)] = ds.at(r, c) - mean[c];
    a.selfadjointView<Eigen::Lower>().rankUpdate(xr);
    rhs += xr * (ds.y[r] - ymean);
  }
  Eigen::MatrixXd full = a.selfadjointView<Eigen::Lower>();
  a = full;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m - 1);
  if (d > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
    const double dmax = diag.maxCoeff();
    const bool singular = ldlt.info() != Eigen::Success || !(diag.minCoeff() > 1e-12 * std::max(dmax, 1e-300));
    if (singular) {
      if (!allow_ridge) throw InvalidParameter("fit_linear: rank-deficient design matrix");
      a.diagonal().array() += kRidge;
      ldlt.compute(a);
    }
    w = ldlt.solve(rhs);
  }
  std::vector<double> weights(w.data(), w.data() + w.size());
  double bias = ymean;
  for (std::size_t c = 0; c < d; ++c) bias -= weights[c] * mean[c];
  return ThermalModel::linear(model_names(ds), std::vector<double>(d, 0.0), std::vector<double>(d, 1.0),
                              std::move(weights), bias);
}

void MlpArchitecture::validate() const {
  if (hidden_layers < 1) throw InvalidParameter("mlp: hidden_layers must be >= 1");
  if (neurons < 1) throw InvalidParameter("mlp: neurons must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidParameter("mlp: learning_rate must be > 0");
  if (epochs < 0) throw InvalidParameter("mlp: epochs must be >= 0");
  if (batch_size < 1) throw InvalidParameter("mlp: batch_size must be >= 1");
}

std::size_t MlpArchitecture::parameter_count(std::size_t n_inputs) const {
  const std::size_t h = static_cast<std::size_t>(neurons);
  std::size_t count = (n_inputs + 1) * h;
  count += static_cast<std::size_t>(hidden_layers - 1) * (h + 1) * h;
  return count + h + 1;
}

MlpNetwork MlpNetwork::xavier(std::size_t n_inputs, const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  if (n_inputs == 0) throw InvalidParameter("mlp: no inputs");
  std::mt19937_64 rng(derive_seed({seed, 0x58617669ULL}));
  MlpNetwork net;
  std::size_t in = n_inputs;
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const std::size_t out = l == arch.hidden_layers ? 1 : static_cast<std::size_t>(arch.neurons);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer L{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
    for (double& w : L.w) w = dist(rng);
    net.layers.push_back(std::move(L));
    in = out;
  }
  return net;
}

double MlpNetwork::forward(std::span<const double> x) const {
  if (layers.empty() || x.size() != layers.front().n_in) throw InvalidParameter("mlp: input size mismatch");
  Backprop bp(*this);
  return bp.forward(x);
}

double MlpNetwork::loss(const Dataset& ds, std::span<const std::size_t> rows) const {
  Backprop bp(*this);
  double s = 0.0;
  const std::size_t n = rows.empty() ? ds.rows : rows.size();
  if (n == 0) throw InvalidParameter("mlp: empty batch");
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = rows.empty() ? k : rows[k];
    const double e = bp.forward(ds.row(r)) - ds.y[r];
    s += e * e;
  }
  return s / static_cast<double>(n);
}

double MlpNetwork::gradient(const Dataset& ds, std::span<const std::size_t> rows,
                            std::vector<DenseLayer>& grad) const {
  grad = zeros_like(layers);
  Backprop bp(*this);
  const std::size_t n = rows.empty() ? ds.rows : rows.size();
  if (n == 0) throw InvalidParameter("mlp: empty batch");
  const double scale = 1.0 / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t r = rows.empty() ? k : rows[k];
    s += bp.accumulate(ds.row(r), ds.y[r], scale, grad);
  }
  return s * scale;
}

ThermalModel fit_mlp(const Dataset& ds, const MlpArchitecture& arch, std::uint64_t seed, MlpTrainingLog* log) {
  MlpNetwork net = train_network(ds, arch, seed, log);
  return ThermalModel::mlp(model_names(ds), std::vector<double>(ds.cols, 0.0), std::vector<double>(ds.cols, 1.0),
                           std::move(net.layers));
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidParameter("kfold: k must be >= 2");
  const std::size_t folds = static_cast<std::size_t>(k);
  if (n < folds) throw InvalidParameter("kfold: fold smaller than one sample");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(derive_seed({seed, 0x466f6c64ULL}));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                  perm.begin() + static_cast<std::ptrdiff_t>(start + size));
    std::sort(out[f].begin(), out[f].end());
    start += size;
  }
  return out;
}

std::vector<MlpArchitecture> default_mlp_grid(const MlpArchitecture& base) {
  std::vector<MlpArchitecture> grid;
  for (int h : {1, 2, 3})
    for (int n : {5, 10, 20}) {
      MlpArchitecture a = base;
      a.hidden_layers = h;
      a.neurons = n;
      grid.push_back(a);
    }
  return grid;
}

GridSearchResult grid_search_cv(const Dataset& ds, std::span<const MlpArchitecture> grid, int k, std::uint64_t seed,
                                double tie_tolerance) {
  if (grid.empty()) throw InvalidParameter("grid_search_cv: empty grid");
  ds.validate();
  const auto folds = kfold_partition(ds.rows, k, seed);

  GridSearchResult res;
  res.mean_rmse.assign(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const MlpArchitecture& arch = grid[g];
    double sum = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<std::size_t> train;
      for (std::size_t o = 0; o < folds.size(); ++o)
        if (o != f) train.insert(train.end(), folds[o].begin(), folds[o].end());
      std::sort(train.begin(), train.end());
      const std::uint64_t s = derive_seed({seed, static_cast<std::uint64_t>(arch.hidden_layers),
                                           static_cast<std::uint64_t>(arch.neurons), f});
      const std::string id = std::to_string(arch.hidden_layers) + "x" + std::to_string(arch.neurons) + " fold " +
                              std::to_string(f);
      MlpNetwork net;
      try {
        net = train_network(ds.subset(train), arch, s, nullptr);
      } catch (const TrainingFailure& e) {
        throw TrainingFailure("grid search, architecture " + id + ": loss diverged", e.epoch());
      }
      const double mse = net.loss(ds, folds[f]);
      if (!std::isfinite(mse)) throw TrainingFailure("grid search, architecture " + id + ": non-finite validation loss", arch.epochs);
      const double r = std::sqrt(mse);
      res.cv_table.push_back({arch.hidden_layers, arch.neurons, static_cast<int>(f), r});
      sum += r;
    }
    res.mean_rmse[g] = sum / static_cast<double>(folds.size());
  }

  const double best = *std::min_element(res.mean_rmse.begin(), res.mean_rmse.end());
  std::size_t pick = grid.size();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (res.mean_rmse[g] > best * (1.0 + tie_tolerance)) continue;
    if (pick == grid.size() || grid[g].parameter_count(ds.cols) < grid[pick].parameter_count(ds.cols)) pick = g;
  }
  res.best_index = pick;
  res.best = grid[pick];
  return res;
}

void write_cv_table(const std::filesystem::path& path, std::span<const CvRow> rows) {
  csv::Table t;
  t.header = {"hidden_layers", "neurons", "fold", "rmse_k"};
  for (const CvRow& r : rows)
    t.rows.push_back({csv::format(static_cast<long long>(r.hidden_layers)),
                      csv::format(static_cast<long long>(r.neurons)), csv::format(static_cast<long long>(r.fold)),
                      csv::format(r.rmse_k)});
  csv::write(path, t);
}

ThermalFit fit_thermal_pipeline(std::span<const ChargingEvent> events, const EcmTables& tables,
                                const ThermalFitOptions& options, std::uint64_t seed) {
  const Dataset raw = screen_features(build_thermal_dataset(events, tables), options.screen_threshold);
  const Normalizer norm = fit_normalizer(raw);
  const Dataset z = norm.apply(raw);

  ThermalFit fit;
  fit.features = raw.feature_names;
  fit.search = grid_search_cv(z, options.grid, options.folds, seed);
  fit.mlp = attach_normalizer(fit_mlp(z, fit.search.best, derive_seed({seed, 0x46696e616cULL})), norm);
  fit.linear = fit_linear(raw);

  const auto folds = kfold_partition(raw.rows, options.folds, seed);
  double sum = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t o = 0; o < folds.size(); ++o)
      if (o != f) train.insert(train.end(), folds[o].begin(), folds[o].end());
    std::sort(train.begin(), train.end());
    const ThermalModel lin = fit_linear(raw.subset(train));
    std::vector<double> pred, actual;
    for (std::size_t r : folds[f]) {
      pred.push_back(lin.predict_row(raw.row(r)));
      actual.push_back(raw.y[r]);
    }
    sum += rmse(pred, actual);
  }
  fit.linear_cv_rmse = sum / static_cast<double>(folds.size());
  return fit;
}

double rmse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw InvalidParameter("rmse: length mismatch");
  if (pred.empty()) throw InvalidParameter("rmse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw InvalidParameter("mae: length mismatch");
  if (pred.empty()) throw InvalidParameter("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

} // namespace smartcharge
