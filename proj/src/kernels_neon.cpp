#if defined(__aarch64__)

#include <arm_neon.h>

#include <span>

namespace streammark::kernels::neon {

double sum(std::span<const double> x) {
  size_t n = x.size();
  size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(&x[i]));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size() < y.size() ? x.size() : y.size();
  size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(&x[i]), vld1q_f64(&y[i]));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_squares(std::span<const double> x) {
  size_t n = x.size();
  size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(&x[i]);
    acc = vfmaq_f64(acc, v, v);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

}  // namespace streammark::kernels::neon

#endif  // __aarch64__
