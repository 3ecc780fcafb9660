#include "streammark/kernels.hpp"

namespace streammark::kernels {

namespace scalar {

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  size_t n = x.size() < y.size() ? x.size() : y.size();
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
}  // namespace neon
#endif

namespace {

using SumFn = double (*)(std::span<const double>);
using DotFn = double (*)(std::span<const double>, std::span<const double>);

struct Dispatch {
  SumFn sum = scalar::sum;
  DotFn dot = scalar::dot;
  SumFn sum_squares = scalar::sum_squares;
  const char* backend = "scalar";

  Dispatch() {
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx2")) {
      sum = avx2::sum;
      dot = avx2::dot;
      sum_squares = avx2::sum_squares;
      backend = "avx2";
    }
#elif defined(__aarch64__)
    sum = neon::sum;
    dot = neon::dot;
    sum_squares = neon::sum_squares;
    backend = "neon";
#endif
  }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

double sum(std::span<const double> x) { return dispatch().sum(x); }

double dot(std::span<const double> x, std::span<const double> y) {
  return dispatch().dot(x, y);
}

double sum_squares(std::span<const double> x) {
  return dispatch().sum_squares(x);
}

const char* active_backend() { return dispatch().backend; }

}  // namespace streammark::kernels
