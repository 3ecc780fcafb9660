#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "streammark/common.hpp"

namespace streammark {

// Classic m-bit / k-hash Bloom filter with double hashing. No false
// negatives; expected false-positive rate (1 - e^(-kn/m))^k.
class BloomFilter {
 public:
  BloomFilter(size_t bits, int hashes, uint64_t seed = 0);

  void insert(std::string_view item);
  bool may_contain(std::string_view item) const;

  size_t bit_count() const { return m_; }
  int hash_count() const { return k_; }
  uint64_t inserted() const { return n_; }

  double expected_fpr() const {
    double kn_m = static_cast<double>(k_) * static_cast<double>(n_) /
                  static_cast<double>(m_);
    return std::pow(1.0 - std::exp(-kn_m), k_);
  }

 private:
  size_t m_;
  int k_;
  uint64_t seed_;
  uint64_t n_ = 0;
  std::vector<uint64_t> words_;
};

// Durand-Flajolet LogLog cardinality sketch: m = 2^b max-rank registers,
// estimate alpha_m * m * 2^(mean register). Standard error ~1.30/sqrt(m).
// Small cardinalities fall back to linear counting over empty registers.
class LogLogSketch {
 public:
  explicit LogLogSketch(int bucket_bits = 10, uint64_t seed = 0);

  void add(std::string_view item);
  void add_hash(uint64_t h);
  double estimate() const;

  int bucket_count() const { return m_; }
  double alpha() const { return alpha_; }
  const std::vector<uint8_t>& registers() const { return regs_; }

 private:
  int b_;
  int m_;
  double alpha_;
  uint64_t seed_;
  std::vector<uint8_t> regs_;
  // Running register sum and empty count keep estimate() O(1); the running
  // estimate is emitted per input message.
  uint64_t reg_sum_ = 0;
  int zeros_;
};

// Alon-Matias-Szegedy sketch for the second frequency moment F2 = sum f_i^2.
// A grid of t x b signed counters; each cell uses a 4-wise independent +-1
// hash. The estimate is the median over rows of the mean of squared counters.
class AmsSketch {
 public:
  AmsSketch(int rows = 5, int cols = 20, uint64_t seed = 0);

  void add(std::string_view item);
  void add_key(uint64_t key);
  double estimate() const;

  int rows() const { return t_; }
  int cols() const { return b_; }
  // Single-cell view for the unbiasedness tests.
  int64_t counter(int row, int col) const { return z_[row * b_ + col]; }

 private:
  int sign(uint64_t key, int cell) const;

  int t_, b_;
  std::vector<int64_t> z_;
  std::vector<std::array<uint64_t, 4>> coeffs_;  // per-cell 4-wise polynomial
};

}  // namespace streammark
