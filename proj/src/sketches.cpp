#include "streammark/sketches.hpp"

#include <algorithm>
#include <array>

namespace streammark {

// ------------------------------------------------------------------ Bloom

BloomFilter::BloomFilter(size_t bits, int hashes, uint64_t seed)
    : m_(bits ? bits : 1), k_(hashes), seed_(seed),
      words_((m_ + 63) / 64, 0) {}

void BloomFilter::insert(std::string_view item) {
  // Double hashing: g_i = h1 + i*h2.
  uint64_t h1 = hash_str(item, seed_);
  uint64_t h2 = hash_str(item, seed_ ^ 0xb10f117ULL);
  for (int i = 0; i < k_; ++i) {
    uint64_t bit = (h1 + static_cast<uint64_t>(i) * h2) % m_;
    words_[bit >> 6] |= (uint64_t{1} << (bit & 63));
  }
  ++n_;
}

bool BloomFilter::may_contain(std::string_view item) const {
  uint64_t h1 = hash_str(item, seed_);
  uint64_t h2 = hash_str(item, seed_ ^ 0xb10f117ULL);
  for (int i = 0; i < k_; ++i) {
    uint64_t bit = (h1 + static_cast<uint64_t>(i) * h2) % m_;
    if (!(words_[bit >> 6] & (uint64_t{1} << (bit & 63)))) return false;
  }
  return true;
}

// ----------------------------------------------------------------- LogLog

namespace {

// alpha_m = (Gamma(-1/m) * (1 - 2^(1/m)) / ln 2)^(-m), computed via
// Gamma(-x) = Gamma(1-x) / (-x).
double loglog_alpha(int m) {
  double x = 1.0 / static_cast<double>(m);
  double gamma_neg = std::tgamma(1.0 - x) / (-x);
  double base = gamma_neg * (1.0 - std::pow(2.0, x)) / std::log(2.0);
  return std::pow(base, -static_cast<double>(m));
}

}  // namespace

LogLogSketch::LogLogSketch(int bucket_bits, uint64_t seed)
    : b_(bucket_bits),
      m_(1 << bucket_bits),
      alpha_(loglog_alpha(1 << bucket_bits)),
      seed_(seed),
      regs_(static_cast<size_t>(1) << bucket_bits, 0),
      zeros_(1 << bucket_bits) {}

void LogLogSketch::add(std::string_view item) {
  add_hash(hash_str(item, seed_ ^ 0x10610ULL));
}

void LogLogSketch::add_hash(uint64_t h) {
  uint32_t bucket = static_cast<uint32_t>(h & (static_cast<uint64_t>(m_) - 1));
  uint64_t rest = h >> b_;
  // Rank: 1-based position of the first set bit in the remaining stream.
  uint8_t rank = rest == 0 ? static_cast<uint8_t>(64 - b_ + 1)
                           : static_cast<uint8_t>(__builtin_ctzll(rest) + 1);
  uint8_t& reg = regs_[bucket];
  if (rank > reg) {  // registers never decrease
    if (reg == 0) --zeros_;
    reg_sum_ += rank - reg;
    reg = rank;
  }
}

double LogLogSketch::estimate() const {
  double mean = static_cast<double>(reg_sum_) / static_cast<double>(m_);
  double e = alpha_ * static_cast<double>(m_) * std::pow(2.0, mean);
  // Small-range correction: below 2.5*m with empty registers, linear
  // counting is far more accurate (and maps the empty sketch to zero).
  if (e < 2.5 * static_cast<double>(m_) && zeros_ > 0)
    return static_cast<double>(m_) *
           std::log(static_cast<double>(m_) / static_cast<double>(zeros_));
  return e;
}

// -------------------------------------------------------------------- AMS

AmsSketch::AmsSketch(int rows, int cols, uint64_t seed)
    : t_(rows), b_(cols), z_(static_cast<size_t>(rows) * cols, 0) {
  Rng rng(mix64(seed ^ 0xa35ULL));
  coeffs_.resize(static_cast<size_t>(rows) * cols);
  for (auto& c : coeffs_)
    for (auto& v : c) v = rng.next_u64() | 1;  // odd keeps the mix balanced
}

int AmsSketch::sign(uint64_t key, int cell) const {
  // 4-wise independent polynomial over the mixed key; the parity bit of the
  // final mix gives the +-1 value.
  const auto& c = coeffs_[cell];
  uint64_t acc = c[0];
  uint64_t x = mix64(key);
  acc += c[1] * x;
  uint64_t x2 = x * x;
  acc += c[2] * x2;
  acc += c[3] * x2 * x;
  return (mix64(acc) & 1) ? 1 : -1;
}

void AmsSketch::add(std::string_view item) { add_key(hash_str(item)); }

void AmsSketch::add_key(uint64_t key) {
  for (int cell = 0; cell < t_ * b_; ++cell)
    z_[cell] += sign(key, cell);
}

double AmsSketch::estimate() const {
  std::vector<double> row_means(t_);
  for (int r = 0; r < t_; ++r) {
    double s = 0;
    for (int c = 0; c < b_; ++c) {
      double z = static_cast<double>(z_[r * b_ + c]);
      s += z * z;
    }
    row_means[r] = s / static_cast<double>(b_);
  }
  std::sort(row_means.begin(), row_means.end());
  int n = t_;
  if (n % 2 == 1) return row_means[n / 2];
  return 0.5 * (row_means[n / 2 - 1] + row_means[n / 2]);
}

}  // namespace streammark
