#if defined(__x86_64__)

#include <immintrin.h>

#include <span>

namespace streammark::kernels::avx2 {

namespace {

inline double hadd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double sum(std::span<const double> x) {
  size_t n = x.size();
  size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&x[i]));
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size() < y.size() ? x.size() : y.size();
  size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc);
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_squares(std::span<const double> x) {
  size_t n = x.size();
  size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(&x[i]);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hadd(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

}  // namespace streammark::kernels::avx2

#endif  // __x86_64__
