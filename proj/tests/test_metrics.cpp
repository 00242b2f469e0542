#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "support/oracles.hpp"

using namespace lpvbat;
using lpvbat::testing::FixtureRng;

TEST_CASE("rmse hand cases") {
  const std::vector<double> ones = {1.0, 1.0};
  const std::vector<double> zeros = {0.0, 0.0};
  CHECK(rmse(ones, ones) == 0.0);
  // m = 2, divisor m+1 = 3
  CHECK(rmse(ones, zeros) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(ones, zeros, RmseVariant::Samples) == doctest::Approx(1.0));
}

TEST_CASE("rmse matches direct recomputation") {
  FixtureRng rng(101);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = rng.integer(1, 50);
    std::vector<double> y(m), yh(m);
    for (int k = 0; k < m; ++k) {
      y[k] = rng.uniform(-5.0, 5.0);
      yh[k] = rng.uniform(-5.0, 5.0);
    }
    double acc = 0.0;
    for (int k = 0; k < m; ++k) acc += (y[k] - yh[k]) * (y[k] - yh[k]);
    CHECK(std::abs(rmse(y, yh) - std::sqrt(acc / (m + 1))) <= 1e-15 * (1 + rmse(y, yh)));
    CHECK(rmse(y, yh) == rmse(yh, y));
  }
}

TEST_CASE("rmse scales linearly") {
  FixtureRng rng(55);
  std::vector<double> y(30), yh(30), y2(30), yh2(30);
  for (int k = 0; k < 30; ++k) {
    y[k] = rng.uniform(-1.0, 1.0);
    yh[k] = rng.uniform(-1.0, 1.0);
    y2[k] = 7.0 * y[k];
    yh2[k] = 7.0 * yh[k];
  }
  CHECK(rmse(y2, yh2) == doctest::Approx(7.0 * rmse(y, yh)).epsilon(1e-14));
}

TEST_CASE("vaf") {
  std::vector<double> y = {1.0, 2.0, 4.0, 1.5, 0.5};

  SUBCASE("perfect fit gives 100") {
    CHECK(vaf(y, y) == doctest::Approx(100.0));
  }
  SUBCASE("constant offset residual still gives 100") {
    std::vector<double> shifted(y);
    for (double& v : shifted) v += 0.25;
    CHECK(vaf(y, shifted) == doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("adding the same constant to both inputs changes nothing") {
    std::vector<double> yh = {1.1, 1.9, 4.2, 1.4, 0.6};
    const double base = vaf(y, yh);
    std::vector<double> y2(y), yh2(yh);
    for (double& v : y2) v += 3.0;
    for (double& v : yh2) v += 3.0;
    CHECK(vaf(y2, yh2) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("denominator variant") {
    std::vector<double> yh = {1.1, 1.9, 4.2, 1.4, 0.6};
    CHECK(vaf(y, yh, VafVariant::VarEstimate) != vaf(y, yh, VafVariant::VarReference));
  }
  SUBCASE("degenerate estimate variance") {
    std::vector<double> flat(5, 2.0);
    CHECK_THROWS_AS(vaf(y, flat), Error);
  }
  SUBCASE("length mismatch") {
    std::vector<double> shorter = {1.0, 2.0};
    CHECK_THROWS_AS(vaf(y, shorter), Error);
    CHECK_THROWS_AS(rmse(y, shorter), Error);
  }
}

TEST_CASE("vaf matches direct recomputation") {
  FixtureRng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = rng.integer(2, 60);
    std::vector<double> y(m), yh(m);
    for (int k = 0; k < m; ++k) {
      y[k] = rng.uniform(-5.0, 5.0);
      yh[k] = rng.uniform(-5.0, 5.0);
    }
    auto var = [&](const std::vector<double>& x) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= x.size();
      double acc = 0.0;
      for (double v : x) acc += (v - mean) * (v - mean);
      return acc / x.size();
    };
    std::vector<double> resid(m);
    for (int k = 0; k < m; ++k) resid[k] = y[k] - yh[k];
    const double want = (1.0 - var(resid) / var(yh)) * 100.0;
    CHECK(vaf(y, yh) == doctest::Approx(want).epsilon(1e-14));
  }
}
