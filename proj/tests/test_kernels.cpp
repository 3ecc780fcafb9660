#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "streammark/common.hpp"
#include "streammark/kernels.hpp"

using namespace streammark;

namespace {

// Long-double accumulation as the independent reference.
long double ref_sum(const std::vector<double>& x) {
  long double s = 0;
  for (double v : x) s += v;
  return s;
}

long double ref_dot(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += (long double)x[i] * y[i];
  return s;
}

std::vector<double> random_vec(Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("sum and dot match a long-double reference") {
  Rng rng(11);
  for (size_t n : {size_t{0}, size_t{1}, size_t{3}, size_t{4}, size_t{7},
                   size_t{90}, size_t{1000}}) {
    auto x = random_vec(rng, n, -100, 100);
    auto y = random_vec(rng, n, -5, 5);
    long double rs = ref_sum(x);
    CHECK(std::abs(kernels::sum(x) - (double)rs) <=
          1e-12 * (1.0 + std::abs((double)rs)) + 1e-9);
    long double rd = ref_dot(x, y);
    CHECK(std::abs(kernels::dot(x, y) - (double)rd) <=
          1e-10 * (1.0 + std::abs((double)rd)) + 1e-9);
    long double rq = ref_dot(x, x);
    CHECK(std::abs(kernels::sum_squares(x) - (double)rq) <=
          1e-10 * (1.0 + std::abs((double)rq)) + 1e-9);
  }
}

TEST_CASE("dispatched backend is equivalent to the scalar reference") {
  Rng rng(29);
  INFO("active backend: ", kernels::active_backend());
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = rng.below(257);
    auto x = random_vec(rng, n, -1000, 1000);
    auto y = random_vec(rng, n, -2, 2);
    double mag = 0;
    for (double v : x) mag += std::abs(v);
    CHECK(std::abs(kernels::sum(x) - kernels::scalar::sum(x)) <= 1e-12 * (mag + 1));
    double dmag = 0;
    for (size_t i = 0; i < n; ++i) dmag += std::abs(x[i] * y[i]);
    CHECK(std::abs(kernels::dot(x, y) - kernels::scalar::dot(x, y)) <=
          1e-12 * (dmag + 1));
    double qmag = 0;
    for (double v : x) qmag += v * v;
    CHECK(std::abs(kernels::sum_squares(x) - kernels::scalar::sum_squares(x)) <=
          1e-12 * (qmag + 1));
  }
}

TEST_CASE("empty input and backend name") {
  CHECK(kernels::mean({}) == 0.0);
  const char* b = kernels::active_backend();
  CHECK((std::strcmp(b, "scalar") == 0 || std::strcmp(b, "avx2") == 0 ||
         std::strcmp(b, "neon") == 0));
}

}  // TEST_SUITE
