// Portable reference kernels. The arithmetic order here is the contract the
// vector variants reproduce.

#include <cmath>

#include "smartcharge/kernels.hpp"

namespace smartcharge::kernels {

namespace {

void ecm_sweep_scalar(double u_ocv, double r_i, double dt_h, const double* p, std::size_t n, double* delta_e,
                      double* q_loss, std::uint8_t* feasible) {
  const double uu = u_ocv * u_ocv;
  const double r4 = 4.0 * r_i;
  for (std::size_t k = 0; k < n; ++k) {
    const double p_w = p[k] * 1000.0;
    const double disc = uu + r4 * p_w;
    if (disc >= 0.0) {
      const double i = (2.0 * p_w) / (u_ocv + std::sqrt(disc));
      const double q = (r_i * i) * i / 1000.0;
      feasible[k] = 1;
      q_loss[k] = q;
      delta_e[k] = dt_h * (p[k] - q);
    } else {
      feasible[k] = 0;
      q_loss[k] = 0.0;
      delta_e[k] = 0.0;
    }
  }
}

void dense_scalar(const double* w, const double* bias, std::size_t n_out, std::size_t n_in, const double* in,
                  std::size_t n, double* out, Activation act) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* wo = w + o * n_in;
    double* row = out + o * n;
    for (std::size_t b = 0; b < n; ++b) {
      double acc = bias[o];
      for (std::size_t f = 0; f < n_in; ++f) acc = acc + wo[f] * in[f * n + b];
      row[b] = act == Activation::sigmoid ? 1.0 / (1.0 + std::exp(-acc)) : acc;
    }
  }
}

void standardize_scalar(double* x, std::size_t n, double mean, double stddev) {
  for (std::size_t b = 0; b < n; ++b) x[b] = (x[b] - mean) / stddev;
}

std::size_t argmin_scalar(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (v[k] < v[best]) best = k;
  return best;
}

} // namespace

namespace detail {
const KernelTable scalar_table{Isa::scalar, ecm_sweep_scalar, dense_scalar, standardize_scalar, argmin_scalar};
} // namespace detail

} // namespace smartcharge::kernels
