#pragma once

// Data-parallel inner loops of the dynamic-programming sweep.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2
// variant. The variant is chosen once at runtime from CPUID and can be forced
// with the SMARTCHARGE_SIMD environment variable (`scalar` or `avx2`) or
// kernels::select().
//
// The ECM sweep, standardization and argmin variants are bit-identical to the
// scalar reference. The sigmoid activation uses a polynomial exp in the AVX2
// path and agrees with std::exp to a few ulp.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace smartcharge::kernels {

enum class Isa { scalar, avx2 };

enum class Activation { identity, sigmoid };

struct KernelTable {
  Isa isa;

  /// For every power p[k] (kW): feasible[k] = 1 iff U_OCV^2 + 4 R_i p >= 0;
  /// delta_e[k] (kWh) and q_loss[k] (kW) over an interval of dt_h hours.
  /// Infeasible lanes get zeros.
  void (*ecm_sweep)(double u_ocv, double r_i, double dt_h, const double* p, std::size_t n, double* delta_e,
                    double* q_loss, std::uint8_t* feasible);

  /// Dense layer over a batch in structure-of-arrays layout:
  /// out[o*n + b] = act(bias[o] + sum_f w[o*n_in + f] * in[f*n + b]),
  /// accumulated in increasing f.
  void (*dense)(const double* w, const double* bias, std::size_t n_out, std::size_t n_in, const double* in,
                std::size_t n, double* out, Activation act);

  /// In place: x[b] = (x[b] - mean) / stddev.
  void (*standardize)(double* x, std::size_t n, double mean, double stddev);

  /// Index of the minimum; the lowest index wins ties. n must be >= 1.
  std::size_t (*argmin)(const double* v, std::size_t n);
};

bool supported(Isa isa) noexcept;
std::string_view name(Isa isa) noexcept;

/// Kernel table of a specific instruction set; throws InvalidParameter if the
/// CPU or the build does not support it.
const KernelTable& table(Isa isa);

/// Currently selected table (detected on first use).
const KernelTable& active();

/// Overrides the runtime selection for the whole process.
void select(Isa isa);

/// Best instruction set available on this machine, honoring SMARTCHARGE_SIMD.
Isa detect();

// Span conveniences over the active (or given) table.

inline void ecm_sweep(const KernelTable& kt, double u_ocv, double r_i, double dt_h, std::span<const double> p,
                      std::span<double> delta_e, std::span<double> q_loss, std::span<std::uint8_t> feasible) {
  kt.ecm_sweep(u_ocv, r_i, dt_h, p.data(), p.size(), delta_e.data(), q_loss.data(), feasible.data());
}

inline std::size_t argmin(const KernelTable& kt, std::span<const double> v) { return kt.argmin(v.data(), v.size()); }

namespace detail {
extern const KernelTable scalar_table;
#if defined(SMARTCHARGE_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
} // namespace detail

} // namespace smartcharge::kernels
