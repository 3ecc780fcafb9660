#pragma once

#include <cstddef>
#include <span>

namespace streammark::kernels {

// Dense reduction kernels behind the windowed/statistical tasks and the
// metric summaries. Scalar versions are the reference; a SIMD variant is
// selected once at startup when the CPU supports it. Tolerances for the two
// paths are covered by equivalence tests.

namespace scalar {
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
}  // namespace scalar

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);

inline double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : sum(x) / static_cast<double>(x.size());
}

// Name of the active backend ("scalar", "avx2", "neon").
const char* active_backend();

}  // namespace streammark::kernels
