#include "kernels_internal.hpp"

#ifdef QAVG_HAVE_AVX2_KERNELS
#include <immintrin.h>

#define QAVG_AVX2 __attribute__((target("avx2")))

namespace qavg::kernels::detail {
namespace {

// Scalar tails in this file repeat the reference formulas verbatim so the
// element-wise kernels stay bit-identical to scalar.cpp.

QAVG_AVX2 double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

QAVG_AVX2 void design_eval(const double* x, std::size_t n, const double* c, std::size_t k, double* out) {
  const __m256d c0 = _mm256_set1_pd(c[0]);
  const __m256d c1 = _mm256_set1_pd(c[1]);
  std::size_t t = 0;
  if (k == 3) {
    const __m256d c2 = _mm256_set1_pd(c[2]);
    for (; t + 4 <= n; t += 4) {
      const __m256d xv = _mm256_loadu_pd(x + t);
      const __m256d lin = _mm256_add_pd(c0, _mm256_mul_pd(c1, xv));
      _mm256_storeu_pd(out + t, _mm256_add_pd(lin, _mm256_mul_pd(c2, _mm256_mul_pd(xv, xv))));
    }
    for (; t < n; ++t) out[t] = (c[0] + c[1] * x[t]) + c[2] * (x[t] * x[t]);
  } else {
    for (; t + 4 <= n; t += 4) {
      const __m256d xv = _mm256_loadu_pd(x + t);
      _mm256_storeu_pd(out + t, _mm256_add_pd(c0, _mm256_mul_pd(c1, xv)));
    }
    for (; t < n; ++t) out[t] = c[0] + c[1] * x[t];
  }
}

QAVG_AVX2 void affine(const double* x, std::size_t n, double a, double b, double* out) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    _mm256_storeu_pd(out + t, _mm256_add_pd(_mm256_mul_pd(av, _mm256_loadu_pd(x + t)), bv));
  }
  for (; t < n; ++t) out[t] = a * x[t] + b;
}

QAVG_AVX2 void affine_accumulate(const double* x, std::size_t n, double a, double b, double* acc) {
  const __m256d av = _mm256_set1_pd(a);
  const __m256d bv = _mm256_set1_pd(b);
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d term = _mm256_add_pd(_mm256_mul_pd(av, _mm256_loadu_pd(x + t)), bv);
    _mm256_storeu_pd(acc + t, _mm256_add_pd(_mm256_loadu_pd(acc + t), term));
  }
  for (; t < n; ++t) acc[t] = acc[t] + (a * x[t] + b);
}

QAVG_AVX2 void difference(const double* a, const double* b, std::size_t n, double* out) {
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    _mm256_storeu_pd(out + t, _mm256_sub_pd(_mm256_loadu_pd(a + t), _mm256_loadu_pd(b + t)));
  }
  for (; t < n; ++t) out[t] = a[t] - b[t];
}

QAVG_AVX2 IntervalSums interval_sums(const double* lo, const double* hi, const double* y, std::size_t n) {
  __m256d width = _mm256_setzero_pd();
  __m256d penalty = _mm256_setzero_pd();
  std::size_t covered = 0;
  std::size_t crossings = 0;
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d l = _mm256_loadu_pd(lo + t);
    const __m256d u = _mm256_loadu_pd(hi + t);
    const __m256d v = _mm256_loadu_pd(y + t);
    width = _mm256_add_pd(width, _mm256_sub_pd(u, l));
    const __m256d below = _mm256_cmp_pd(v, l, _CMP_LT_OQ);
    const __m256d above = _mm256_cmp_pd(v, u, _CMP_GT_OQ);
    penalty = _mm256_add_pd(penalty, _mm256_and_pd(below, _mm256_sub_pd(l, v)));
    penalty = _mm256_add_pd(penalty, _mm256_and_pd(above, _mm256_sub_pd(v, u)));
    const __m256d inside = _mm256_and_pd(_mm256_cmp_pd(v, l, _CMP_GE_OQ), _mm256_cmp_pd(v, u, _CMP_LE_OQ));
    covered += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(inside)));
    crossings += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(_mm256_cmp_pd(l, u, _CMP_GT_OQ))));
  }
  IntervalSums s;
  s.width = hsum(width);
  s.penalty = hsum(penalty);
  for (; t < n; ++t) {
    s.width += hi[t] - lo[t];
    if (y[t] < lo[t]) s.penalty += lo[t] - y[t];
    if (y[t] > hi[t]) s.penalty += y[t] - hi[t];
    if (y[t] >= lo[t] && y[t] <= hi[t]) ++covered;
    if (lo[t] > hi[t]) ++crossings;
  }
  s.covered = covered;
  s.crossings = crossings;
  return s;
}

QAVG_AVX2 double pinball_sum(const double* r, std::size_t n, double p) {
  const __m256d pv = _mm256_set1_pd(p);
  const __m256d qv = _mm256_set1_pd(p - 1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d rv = _mm256_loadu_pd(r + t);
    const __m256d neg = _mm256_cmp_pd(rv, zero, _CMP_LT_OQ);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_blendv_pd(pv, qv, neg), rv));
  }
  double sum = hsum(acc);
  for (; t < n; ++t) sum += r[t] < 0.0 ? (p - 1.0) * r[t] : p * r[t];
  return sum;
}

}  // namespace

const KernelTable kAvx2Table{
    "avx2", design_eval, affine, affine_accumulate, difference, interval_sums, pinball_sum,
};

}  // namespace qavg::kernels::detail

#endif
