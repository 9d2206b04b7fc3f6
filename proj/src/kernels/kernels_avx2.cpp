// AVX2 variants of the reference kernels. Compiled with -mavx2 only (no FMA)
// so products and sums round exactly like the scalar code.

#include <immintrin.h>

#include <cmath>

#include "smartcharge/kernels.hpp"

namespace smartcharge::kernels {

namespace {

inline __m256i tail_mask(std::size_t rem) {
  const long long m0 = rem > 0 ? -1 : 0;
  const long long m1 = rem > 1 ? -1 : 0;
  const long long m2 = rem > 2 ? -1 : 0;
  return _mm256_set_epi64x(0, m2, m1, m0);
}

// exp(x) for |x| <= 700: x = k ln2 + r, |r| <= ln2/2, degree-13 Taylor in r.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(700.0);
  const __m256d lo = _mm256_set1_pd(-700.0);
  x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d kd = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(kd, ln2_hi));
  r = _mm256_sub_pd(r, _mm256_mul_pd(kd, ln2_lo));

  static constexpr double c[] = {1.0,
                                 1.0,
                                 1.0 / 2.0,
                                 1.0 / 6.0,
                                 1.0 / 24.0,
                                 1.0 / 120.0,
                                 1.0 / 720.0,
                                 1.0 / 5040.0,
                                 1.0 / 40320.0,
                                 1.0 / 362880.0,
                                 1.0 / 3628800.0,
                                 1.0 / 39916800.0,
                                 1.0 / 479001600.0,
                                 1.0 / 6227020800.0};
  __m256d poly = _mm256_set1_pd(c[13]);
  for (int i = 12; i >= 0; --i) poly = _mm256_add_pd(_mm256_mul_pd(poly, r), _mm256_set1_pd(c[i]));

  const __m128i k32 = _mm256_cvtpd_epi32(kd);
  __m256i bits = _mm256_cvtepi32_epi64(_mm_add_epi32(k32, _mm_set1_epi32(1023)));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_mul_pd(poly, _mm256_castsi256_pd(bits));
}

inline __m256d sigmoid_pd(__m256d a) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), a));
  return _mm256_div_pd(one, _mm256_add_pd(one, e));
}

inline void ecm_lanes(__m256d p, __m256d uu, __m256d u, __m256d r, __m256d r4, __m256d dt_h, __m256d& de,
                      __m256d& q, __m256d& ok) {
  const __m256d thousand = _mm256_set1_pd(1000.0);
  const __m256d p_w = _mm256_mul_pd(p, thousand);
  const __m256d disc = _mm256_add_pd(uu, _mm256_mul_pd(r4, p_w));
  const __m256d zero = _mm256_setzero_pd();
  ok = _mm256_cmp_pd(disc, zero, _CMP_GE_OQ);
  const __m256d s = _mm256_sqrt_pd(_mm256_max_pd(disc, zero));
  const __m256d i = _mm256_div_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), p_w), _mm256_add_pd(u, s));
  q = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(r, i), i), thousand);
  de = _mm256_mul_pd(dt_h, _mm256_sub_pd(p, q));
  q = _mm256_and_pd(q, ok);
  de = _mm256_and_pd(de, ok);
}

void ecm_sweep_avx2(double u_ocv, double r_i, double dt_h, const double* p, std::size_t n, double* delta_e,
                    double* q_loss, std::uint8_t* feasible) {
  const __m256d u = _mm256_set1_pd(u_ocv);
  const __m256d uu = _mm256_set1_pd(u_ocv * u_ocv);
  const __m256d r = _mm256_set1_pd(r_i);
  const __m256d r4 = _mm256_set1_pd(4.0 * r_i);
  const __m256d dt = _mm256_set1_pd(dt_h);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d de, q, ok;
    ecm_lanes(_mm256_loadu_pd(p + k), uu, u, r, r4, dt, de, q, ok);
    _mm256_storeu_pd(delta_e + k, de);
    _mm256_storeu_pd(q_loss + k, q);
    const int m = _mm256_movemask_pd(ok);
    for (int l = 0; l < 4; ++l) feasible[k + l] = static_cast<std::uint8_t>((m >> l) & 1);
  }
  if (k < n) {
    const __m256i mask = tail_mask(n - k);
    __m256d de, q, ok;
    ecm_lanes(_mm256_maskload_pd(p + k, mask), uu, u, r, r4, dt, de, q, ok);
    _mm256_maskstore_pd(delta_e + k, mask, de);
    _mm256_maskstore_pd(q_loss + k, mask, q);
    const int m = _mm256_movemask_pd(ok);
    for (std::size_t l = 0; k + l < n; ++l) feasible[k + l] = static_cast<std::uint8_t>((m >> l) & 1);
  }
}

void dense_avx2(const double* w, const double* bias, std::size_t n_out, std::size_t n_in, const double* in,
                std::size_t n, double* out, Activation act) {
  const std::size_t full = n / 4 * 4;
  const __m256i mask = tail_mask(n - full);
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* wo = w + o * n_in;
    double* row = out + o * n;
    const __m256d b0 = _mm256_set1_pd(bias[o]);
    for (std::size_t b = 0; b < n; b += 4) {
      const bool tail = b == full;
      __m256d acc = b0;
      for (std::size_t f = 0; f < n_in; ++f) {
        const double* src = in + f * n + b;
        const __m256d x = tail ? _mm256_maskload_pd(src, mask) : _mm256_loadu_pd(src);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(wo[f]), x));
      }
      if (act == Activation::sigmoid) acc = sigmoid_pd(acc);
      if (tail)
        _mm256_maskstore_pd(row + b, mask, acc);
      else
        _mm256_storeu_pd(row + b, acc);
    }
  }
}

void standardize_avx2(double* x, std::size_t n, double mean, double stddev) {
  const __m256d m = _mm256_set1_pd(mean);
  const __m256d s = _mm256_set1_pd(stddev);
  std::size_t b = 0;
  for (; b + 4 <= n; b += 4) _mm256_storeu_pd(x + b, _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(x + b), m), s));
  for (; b < n; ++b) x[b] = (x[b] - mean) / stddev;
}

std::size_t argmin_avx2(const double* v, std::size_t n) {
  if (n < 8) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (v[k] < v[best]) best = k;
    return best;
  }
  __m256d vmin = _mm256_loadu_pd(v);
  std::size_t k = 4;
  for (; k + 4 <= n; k += 4) vmin = _mm256_min_pd(vmin, _mm256_loadu_pd(v + k));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmin);
  double m = lanes[0];
  for (int l = 1; l < 4; ++l)
    if (lanes[l] < m) m = lanes[l];
  for (; k < n; ++k)
    if (v[k] < m) m = v[k];
  const __m256d target = _mm256_set1_pd(m);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const int hit = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(v + j), target, _CMP_EQ_OQ));
    if (hit) return j + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(hit)));
  }
  for (; j < n; ++j)
    if (v[j] == m) return j;
  return 0;
}

} // namespace

namespace detail {
const KernelTable avx2_table{Isa::avx2, ecm_sweep_avx2, dense_avx2, standardize_avx2, argmin_avx2};
} // namespace detail

} // namespace smartcharge::kernels
