#pragma once

// Dense linear algebra, activations and the seeded random source shared by
// every other part of the library. All numerics are binary64.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace sctx {

/// Row-major dense matrix of finite doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of row-major entries; throws if the size is wrong or any entry is non-finite.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return entries_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return entries_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {entries_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {entries_.data() + r * cols_, cols_}; }

  std::span<const double> entries() const noexcept { return entries_; }
  std::span<double> entries() noexcept { return entries_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// y = A x
std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x);
/// y = A^T x
std::vector<double> multiply_transposed(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);

inline double relu(double z) noexcept { return z > 0.0 ? z : 0.0; }

/// Indicator of the strictly positive reals.
inline double heaviside(double z) noexcept { return z > 0.0 ? 1.0 : 0.0; }

/// Logistic function of steepness * z, evaluated without overflow.
inline double sigmoid(double z, double steepness = 1.0) noexcept {
  const double t = steepness * z;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Seeded generator with label-derived independent sub-streams.
///
/// The engine is xoshiro256** seeded through SplitMix64; both are the
/// reference algorithms by Blackman and Vigna, so the stream for a given
/// seed is reproducible in any language:
///
///   state[i] = splitmix64 output i (i = 0..3) starting from `seed`
///   next     = rotl(s1 * 5, 7) * 9, then the standard xoshiro256 update
///   unit     = (next >> 11) * 2^-53, in [0, 1)
///
/// derive(label) returns a fresh source seeded with
/// splitmix64_mix(seed ^ splitmix64_mix(fnv1a64(label))); it depends only on
/// the parent seed and the label, never on how many draws the parent made.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  RandomSource derive(std::string_view label) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of precision.
  double next_unit() noexcept;

  bool operator==(const RandomSource&) const = default;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::uint64_t fnv1a64(std::span<const double> values) noexcept;

/// n draws from N(0, 1) by Box-Muller. Each pair of uniforms (u1, u2) with
/// u1 = 1 - next_unit() and u2 = next_unit() yields
/// sqrt(-2 ln u1) cos(2 pi u2) followed by sqrt(-2 ln u1) sin(2 pi u2);
/// for odd n the final sine value is discarded.
std::vector<double> sample_standard_normal(RandomSource& rng, std::size_t n);

/// n draws from Uniform[lo, hi): lo + (hi - lo) * next_unit().
std::vector<double> sample_uniform(RandomSource& rng, double lo, double hi, std::size_t n);

}  // namespace sctx
