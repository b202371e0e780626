#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "sctx/core_math.hpp"
#include "sctx/errors.hpp"

using namespace sctx;

TEST_CASE("relu and heaviside") {
  CHECK(relu(0.0) == 0.0);
  CHECK(relu(-3.5) == 0.0);
  CHECK(relu(2.25) == 2.25);
  CHECK(heaviside(0.0) == 0.0);
  CHECK(heaviside(1e-12) == 1.0);
  CHECK(heaviside(-1.0) == 0.0);

  RandomSource rng(7);
  for (double z : sample_uniform(rng, -10.0, 10.0, 1000)) {
    if (z != 0.0) CHECK(relu(z) == z * heaviside(z));
  }
}

TEST_CASE("sigmoid") {
  for (double k : {0.1, 1.0, 37.0, 1e4}) CHECK(sigmoid(0.0, k) == 0.5);
  // 1 / (1 + e^-1) evaluated to 30 digits with mpmath
  CHECK(sigmoid(1.0, 1.0) == doctest::Approx(0.731058578630004879251159241822).epsilon(1e-15));
  CHECK(sigmoid(0.5, 1e6) > 1.0 - 1e-15);

  double prev = 0.0;
  for (double z = -20.0; z <= 20.0; z += 0.25) {
    const double s = sigmoid(z, 1.0);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(s > prev);
    prev = s;
  }

  SUBCASE("approaches heaviside for |z| >= 0.01 at steepness 1e4") {
    RandomSource r(11);
    for (double z : sample_uniform(r, 0.01, 5.0, 500)) {
      CHECK(std::abs(sigmoid(z, 1e4) - heaviside(z)) < 1e-20);
      CHECK(std::abs(sigmoid(-z, 1e4) - heaviside(-z)) < 1e-20);
    }
  }
  CHECK(std::isfinite(sigmoid(-1e6, 1e4)));
}

TEST_CASE("dense matrix products match a naive triple loop") {
  RandomSource rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix a(20, 20, sample_standard_normal(rng, 400));
    const auto x = sample_standard_normal(rng, 20);
    const auto y = multiply(a, x);
    const auto yt = multiply_transposed(a, x);
    for (std::size_t i = 0; i < 20; ++i) {
      double s = 0.0, st = 0.0;
      for (std::size_t j = 0; j < 20; ++j) {
        s += a.entries()[i * 20 + j] * x[j];
        st += a.entries()[j * 20 + i] * x[j];
      }
      CHECK(std::abs(y[i] - s) <= 1e-12 * std::max(1.0, std::abs(s)));
      CHECK(std::abs(yt[i] - st) <= 1e-12 * std::max(1.0, std::abs(st)));
    }
  }
}

TEST_CASE("dense matrix validates construction") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), Error);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(DenseMatrix(1, 1, {std::numeric_limits<double>::infinity()}), Error);
  DenseMatrix m(2, 3);
  m(1, 2) = 4.0;
  CHECK(m.row(1)[2] == 4.0);
  CHECK_THROWS_AS(multiply(m, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("random source reproduces the reference xoshiro256** stream") {
  // Independent Python transcription of SplitMix64 seeding + xoshiro256**.
  RandomSource rng(42);
  CHECK(rng.next_u64() == 0x15780b2e0c2ec716ULL);
  CHECK(rng.next_u64() == 0x6104d9866d113a7eULL);
  CHECK(rng.next_u64() == 0xae17533239e499a1ULL);
}

TEST_CASE("random streams are deterministic and label-derived") {
  RandomSource a(123), b(123);
  CHECK(sample_standard_normal(a, 1001) == sample_standard_normal(b, 1001));

  RandomSource parent(99);
  const RandomSource child_before = parent.derive("sim/0");
  (void)parent.next_u64();
  CHECK(parent.derive("sim/0") == child_before);
  CHECK(!(parent.derive("sim/0") == parent.derive("sim/1")));

  RandomSource c0 = parent.derive("sim/0"), c1 = parent.derive("sim/1");
  const auto x = sample_uniform(c0, 0.0, 1.0, 20000);
  const auto y = sample_uniform(c1, 0.0, 1.0, 20000);
  double mx = 0, my = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  // |corr| of independent streams: 5 standard errors at n = 20000
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 5.0 / std::sqrt(20000.0));
}

TEST_CASE("standard normal sampling") {
  RandomSource rng(2024);
  const auto v = sample_standard_normal(rng, 100000);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (v.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
  CHECK_THROWS_AS(sample_standard_normal(rng, 0), Error);

  SUBCASE("odd lengths are prefixes of the paired stream") {
    RandomSource a(5), b(5);
    const auto three = sample_standard_normal(a, 3);
    const auto four = sample_standard_normal(b, 4);
    CHECK(std::equal(three.begin(), three.end(), four.begin()));
  }
}

TEST_CASE("uniform sampling") {
  RandomSource rng(77);
  const auto v = sample_uniform(rng, -1.0, 1.0, 100000);
  for (double x : v) {
    REQUIRE(x >= -1.0);
    REQUIRE(x < 1.0);
  }
  CHECK(std::abs(std::accumulate(v.begin(), v.end(), 0.0) / v.size()) < 0.02);
  RandomSource a(8), b(8);
  CHECK(sample_uniform(a, 2.0, 3.0, 50) == sample_uniform(b, 2.0, 3.0, 50));
  CHECK_THROWS_AS(sample_uniform(rng, 1.0, 1.0, 3), Error);
  CHECK_THROWS_AS(sample_uniform(rng, 2.0, 1.0, 3), Error);
  try {
    sample_uniform(rng, 1.0, 0.0, 1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_range);
  }
}
