#include "sctx/core_math.hpp"

#include <bit>
#include <cstring>
#include <numbers>
#include <string>

#include "sctx/errors.hpp"

namespace sctx {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_range: return "invalid-range";
    case ErrorKind::invalid_cuts: return "invalid-cuts";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::size_mismatch: return "size-mismatch";
    case ErrorKind::out_of_domain: return "out-of-domain";
    case ErrorKind::exact_mode_untrainable: return "exact-mode-untrainable";
    case ErrorKind::non_finite_loss: return "non-finite-loss";
    case ErrorKind::no_valid_records: return "no-valid-records";
    case ErrorKind::parse_error: return "parse-error";
  }
  return "unknown";
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  require(entries_.size() == rows_ * cols_, ErrorKind::dimension_mismatch,
          "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
              std::to_string(entries_.size()) + " entries");
  for (double v : entries_) {
    require(std::isfinite(v), ErrorKind::invalid_argument, "matrix entries must be finite");
  }
}

std::vector<double> multiply(const DenseMatrix& a, std::span<const double> x) {
  require(x.size() == a.cols(), ErrorKind::dimension_mismatch, "multiply: vector length != cols");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) y[r] = dot(a.row(r), x);
  return y;
}

std::vector<double> multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
  require(x.size() == a.rows(), ErrorKind::dimension_mismatch,
          "multiply_transposed: vector length != rows");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * x[r];
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::dimension_mismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::uint64_t splitmix64_mix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::span<const double> values) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) {
    word = splitmix64_mix(s);
    s += 0x9E3779B97F4A7C15ULL;
  }
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RandomSource RandomSource::derive(std::string_view label) const {
  return RandomSource(splitmix64_mix(seed_ ^ splitmix64_mix(fnv1a64(label))));
}

std::uint64_t RandomSource::next_u64() noexcept {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double RandomSource::next_unit() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::vector<double> sample_standard_normal(RandomSource& rng, std::size_t n) {
  require(n >= 1, ErrorKind::invalid_argument, "sample_standard_normal: n must be >= 1");
  std::vector<double> out;
  out.reserve(n + 1);
  while (out.size() < n) {
    const double u1 = 1.0 - rng.next_unit();  // (0, 1]
    const double u2 = rng.next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out.push_back(radius * std::cos(angle));
    out.push_back(radius * std::sin(angle));
  }
  out.resize(n);
  return out;
}

std::vector<double> sample_uniform(RandomSource& rng, double lo, double hi, std::size_t n) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorKind::invalid_range,
          "sample_uniform: need finite lo < hi");
  require(n >= 1, ErrorKind::invalid_argument, "sample_uniform: n must be >= 1");
  std::vector<double> out(n);
  const double width = hi - lo;
  for (auto& v : out) {
    v = lo + width * rng.next_unit();
    if (v >= hi) v = std::nextafter(hi, lo);
  }
  return out;
}

}  // namespace sctx
