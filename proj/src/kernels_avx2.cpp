#include "conscale/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace conscale::kern {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swap = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swap));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4),
                                                _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

void sign_counts_avx2(const double* a, std::size_t n, std::size_t* pos,
                      std::size_t* neg) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t p = 0, m = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    p += (std::size_t)__builtin_popcount(
        (unsigned)_mm256_movemask_pd(_mm256_cmp_pd(v, zero, _CMP_GT_OQ)));
    m += (std::size_t)__builtin_popcount(
        (unsigned)_mm256_movemask_pd(_mm256_cmp_pd(v, zero, _CMP_LT_OQ)));
  }
  for (; i < n; ++i) {
    p += a[i] > 0.0;
    m += a[i] < 0.0;
  }
  *pos = p;
  *neg = m;
}

template <int Cmp>
std::size_t survivors_count_impl(const std::uint8_t* alive, const double* a,
                                 std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    unsigned m = (unsigned)_mm256_movemask_pd(
        _mm256_cmp_pd(_mm256_loadu_pd(a + i), zero, Cmp));
    c += (m >> 0 & 1u) & (alive[i + 0] != 0);
    c += (m >> 1 & 1u) & (alive[i + 1] != 0);
    c += (m >> 2 & 1u) & (alive[i + 2] != 0);
    c += (m >> 3 & 1u) & (alive[i + 3] != 0);
  }
  for (; i < n; ++i) {
    c += alive[i] && (Cmp == _CMP_GT_OQ ? a[i] > 0.0 : a[i] < 0.0);
  }
  return c;
}

std::size_t survivors_count_avx2(const std::uint8_t* alive, const double* a,
                                 std::size_t n, int sign) {
  return sign > 0 ? survivors_count_impl<_CMP_GT_OQ>(alive, a, n)
                  : survivors_count_impl<_CMP_LT_OQ>(alive, a, n);
}

template <int Cmp>
std::size_t survivors_commit_impl(std::uint8_t* alive, const double* a,
                                  std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    unsigned m = (unsigned)_mm256_movemask_pd(
        _mm256_cmp_pd(_mm256_loadu_pd(a + i), zero, Cmp));
    alive[i + 0] = alive[i + 0] & (std::uint8_t)(m >> 0 & 1u);
    alive[i + 1] = alive[i + 1] & (std::uint8_t)(m >> 1 & 1u);
    alive[i + 2] = alive[i + 2] & (std::uint8_t)(m >> 2 & 1u);
    alive[i + 3] = alive[i + 3] & (std::uint8_t)(m >> 3 & 1u);
    c += (std::size_t)alive[i + 0] + alive[i + 1] + alive[i + 2] + alive[i + 3];
  }
  for (; i < n; ++i) {
    alive[i] = alive[i] && (Cmp == _CMP_GT_OQ ? a[i] > 0.0 : a[i] < 0.0);
    c += alive[i];
  }
  return c;
}

std::size_t survivors_commit_avx2(std::uint8_t* alive, const double* a,
                                  std::size_t n, int sign) {
  return sign > 0 ? survivors_commit_impl<_CMP_GT_OQ>(alive, a, n)
                  : survivors_commit_impl<_CMP_LT_OQ>(alive, a, n);
}

const Ops kAvx2 = {dot_avx2,   axpy_avx2,
                   sum_avx2,   sign_counts_avx2,
                   survivors_count_avx2, survivors_commit_avx2,
                   "avx2"};

}  // namespace

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Ops& avx2_ops() { return kAvx2; }

}  // namespace conscale::kern

#endif  // x86-64
