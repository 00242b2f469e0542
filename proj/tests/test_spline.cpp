#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "spline.hpp"
#include "support/oracles.hpp"

using namespace lpvbat;
using lpvbat::testing::FixtureRng;

TEST_CASE("clamped uniform construction") {
  SUBCASE("80 segments over [0, 0.8]") {
    const auto basis = SplineBasis::clamped_uniform(0.0, 0.8, 80);
    CHECK(basis.size() == 83);
    CHECK(basis.n_segments() == 80);
    CHECK(basis.breakpoint(1) - basis.breakpoint(0) == doctest::Approx(0.01));
    CHECK(basis.z_min() == 0.0);
    CHECK(basis.z_max() == 0.8);
  }
  SUBCASE("single segment is a Bezier cubic") {
    const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 1);
    CHECK(basis.size() == 4);
    for (double k : basis.knots()) CHECK((k == 0.0 || k == 1.0));
  }
  SUBCASE("knot multiset for 4 segments") {
    const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 4);
    const std::vector<double> expect = {0,    0,   0,    0, 0.25, 0.5,
                                        0.75, 1.0, 1.0, 1.0, 1.0};
    REQUIRE(basis.knots().size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
      CHECK(basis.knots()[i] == doctest::Approx(expect[i]));
  }
  SUBCASE("empty range rejected") {
    CHECK_THROWS_AS(SplineBasis::clamped_uniform(0.5, 0.5, 4), Error);
  }
}

TEST_CASE("basis evaluation") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 4);

  SUBCASE("clamped endpoints interpolate") {
    const Eigen::VectorXd at_min = basis.eval(0.0);
    CHECK(at_min[0] == doctest::Approx(1.0));
    for (int i = 1; i < basis.size(); ++i) CHECK(at_min[i] == 0.0);
    const Eigen::VectorXd at_max = basis.eval(1.0);
    CHECK(at_max[basis.size() - 1] == doctest::Approx(1.0));
    for (int i = 0; i + 1 < basis.size(); ++i) CHECK(at_max[i] == 0.0);
  }

  SUBCASE("matches the literal recursion") {
    FixtureRng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
      const double z = trial == 0 ? 0.3 : rng.uniform(0.0, 1.0);
      const Eigen::VectorXd got = basis.eval(z);
      for (int i = 0; i < basis.size(); ++i) {
        const double want =
            testing::naive_bspline(basis.knots(), i, basis.degree(), z, true);
        CHECK(got[i] == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }

  SUBCASE("out of domain throws") {
    CHECK_THROWS_AS(basis.eval(-0.01), Error);
    CHECK_THROWS_AS(basis.eval(1.01), Error);
  }
}

TEST_CASE("partition of unity, support, positivity over random bases") {
  FixtureRng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const double lo = rng.uniform(-1.0, 0.5);
    const double hi = lo + rng.uniform(0.1, 2.0);
    const int segments = rng.integer(1, 40);
    const auto basis = SplineBasis::clamped_uniform(lo, hi, segments);
    for (int trial = 0; trial < 200; ++trial) {
      const double z = rng.uniform(lo, hi);
      const Eigen::VectorXd g = basis.eval(z);
      CHECK(std::abs(g.sum() - 1.0) < 1e-12);
      int nonzero = 0;
      for (int i = 0; i < basis.size(); ++i) {
        CHECK(g[i] >= 0.0);
        if (g[i] != 0.0) {
          ++nonzero;
          // local support: g_i vanishes outside [z_i, z_{i+p+1}]
          CHECK(z >= basis.knots()[i]);
          CHECK(z <= basis.knots()[i + basis.degree() + 1]);
        }
      }
      CHECK(nonzero <= basis.degree() + 1);
    }
  }
}

TEST_CASE("derivatives") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 4);

  SUBCASE("first derivative vs central differences") {
    FixtureRng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const double z = rng.uniform(0.01, 0.99);
      const double step = 1e-6;
      const Eigen::VectorXd d1 = basis.eval_derivative(z, 1);
      const Eigen::VectorXd fd =
          (basis.eval(z + step) - basis.eval(z - step)) / (2.0 * step);
      for (int i = 0; i < basis.size(); ++i) {
        if (std::abs(d1[i]) > 1e-9)
          CHECK(std::abs(fd[i] - d1[i]) / std::abs(d1[i]) < 1e-5);
        else
          CHECK(std::abs(fd[i]) < 1e-4);
      }
    }
  }

  SUBCASE("second derivative vs finite differences of the first") {
    FixtureRng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const double z = rng.uniform(0.01, 0.99);
      const double step = 1e-6;
      const Eigen::VectorXd d2 = basis.eval_derivative(z, 2);
      const Eigen::VectorXd fd =
          (basis.eval_derivative(z + step, 1) - basis.eval_derivative(z - step, 1)) /
          (2.0 * step);
      for (int i = 0; i < basis.size(); ++i) {
        if (std::abs(d2[i]) > 1e-6)
          CHECK(std::abs(fd[i] - d2[i]) / std::abs(d2[i]) < 1e-5);
      }
    }
  }

  SUBCASE("matches the literal derivative recursion") {
    FixtureRng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const double z = rng.uniform(0.0, 1.0);
      for (int d = 1; d <= 3; ++d) {
        const Eigen::VectorXd got = basis.eval_derivative(z, d);
        for (int i = 0; i < basis.size(); ++i) {
          const double want = testing::naive_bspline_derivative(
              basis.knots(), i, basis.degree(), d, z, true);
          CHECK(got[i] == doctest::Approx(want).epsilon(1e-10));
        }
      }
    }
  }

  SUBCASE("first derivative integrates to endpoint difference") {
    // Fundamental theorem, Simpson on a fine grid.
    const int n = 4000;
    const double step = 1.0 / n;
    for (int i = 0; i < basis.size(); ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        const double a = k * step, b = (k + 1) * step;
        const double fa = basis.eval_derivative(a, 1)[i];
        const double fm = basis.eval_derivative(0.5 * (a + b), 1)[i];
        const double fb = basis.eval_derivative(b, 1)[i];
        acc += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
      }
      const double want = basis.eval(1.0)[i] - basis.eval(0.0)[i];
      CHECK(std::abs(acc - want) < 1e-6);
    }
  }

  SUBCASE("third derivative piecewise constant") {
    for (int seg = 0; seg < basis.n_segments(); ++seg) {
      const double a = basis.breakpoint(seg);
      const double b = basis.breakpoint(seg + 1);
      const Eigen::VectorXd ref = basis.eval_derivative(0.5 * (a + b), 3);
      for (int s = 0; s < 5; ++s) {
        const double z = a + (b - a) * (s + 0.5) / 5.0;
        const Eigen::VectorXd got = basis.eval_derivative(z, 3);
        for (int i = 0; i < basis.size(); ++i) CHECK(got[i] == ref[i]);
      }
    }
  }

  SUBCASE("invalid order") {
    CHECK_THROWS_AS(basis.eval_derivative(0.5, 4), Error);
    CHECK_THROWS_AS(basis.eval_derivative(0.5, 0), Error);
  }
}

TEST_CASE("continuity at interior knots") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 8);
  for (int j = 1; j < basis.n_segments(); ++j) {
    const double knot = basis.breakpoint(j);
    const double left = std::nextafter(knot, -1.0);
    // value and first two derivatives continuous
    const Eigen::VectorXd v_r = basis.eval(knot);
    const Eigen::VectorXd v_l = basis.eval(left);
    CHECK((v_r - v_l).lpNorm<Eigen::Infinity>() < 1e-9);
    for (int d = 1; d <= 2; ++d) {
      const Eigen::VectorXd d_r = basis.eval_derivative(knot, d);
      const Eigen::VectorXd d_l = basis.eval_derivative(left, d);
      CHECK((d_r - d_l).lpNorm<Eigen::Infinity>() < 1e-9 * std::pow(8.0, d) * 10);
    }
    // the third generally jumps
    const Eigen::VectorXd t_r = basis.eval_derivative(knot, 3);
    const Eigen::VectorXd t_l = basis.eval_derivative(left, 3);
    CHECK((t_r - t_l).lpNorm<Eigen::Infinity>() > 1.0);
  }
}

TEST_CASE("basis matrix") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 10);
  FixtureRng rng(11);
  std::vector<double> samples(200);
  for (auto& z : samples) z = rng.uniform(0.0, 1.0);
  const Eigen::MatrixXd g = basis_matrix(basis, samples);
  REQUIRE(g.rows() == 200);
  REQUIRE(g.cols() == basis.size());
  for (int k = 0; k < g.rows(); ++k) {
    CHECK(std::abs(g.row(k).sum() - 1.0) < 1e-12);
    int nonzero = 0;
    for (int i = 0; i < g.cols(); ++i) nonzero += g(k, i) != 0.0;
    CHECK(nonzero <= basis.degree() + 1);
  }

  SUBCASE("single sample reduces to eval") {
    const std::vector<double> one = {0.37};
    const Eigen::MatrixXd row = basis_matrix(basis, one);
    const Eigen::VectorXd direct = basis.eval(0.37);
    CHECK((row.row(0).transpose() - direct).norm() == 0.0);
  }

  SUBCASE("offending index reported") {
    std::vector<double> bad = {0.2, 0.4, 1.7};
    try {
      basis_matrix(basis, bad);
      FAIL("expected OutOfDomain");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfDomain);
      CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
    }
  }
}

TEST_CASE("third-derivative knot matrix") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 1.0, 4);
  const Eigen::MatrixXd g3 = third_derivative_knot_matrix(basis);
  CHECK(g3.rows() == 4);
  CHECK(g3.cols() == 7);

  SUBCASE("rows equal the interval-constant third derivative") {
    for (int j = 0; j < 4; ++j) {
      const double z = basis.breakpoint(j) + 0.13 * 0.25;
      const Eigen::VectorXd d3 = basis.eval_derivative(z, 3);
      CHECK((g3.row(j).transpose() - d3).lpNorm<Eigen::Infinity>() == 0.0);
    }
  }

  SUBCASE("difference rows annihilate a global cubic") {
    // Fit control points to a single cubic by least squares; the third
    // derivative is then globally constant and all jumps vanish.
    const int m = 200;
    Eigen::MatrixXd g(m, basis.size());
    Eigen::VectorXd f(m);
    for (int k = 0; k < m; ++k) {
      const double z = k / static_cast<double>(m - 1);
      g.row(k) = basis.eval(z).transpose();
      f[k] = 2.0 - z + 0.5 * z * z - 3.0 * z * z * z;
    }
    const Eigen::VectorXd c = g.colPivHouseholderQr().solve(f);
    const Eigen::MatrixXd d = difference_matrix(4);
    CHECK(((d * g3) * c).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("curve evaluation") {
  const auto basis = SplineBasis::clamped_uniform(0.0, 0.8, 80);

  SUBCASE("constant control points give a constant curve") {
    SplineCurve curve{basis, Eigen::VectorXd::Constant(basis.size(), 2.5)};
    FixtureRng rng(9);
    for (int k = 0; k < 100; ++k)
      CHECK(curve.eval(rng.uniform(0.0, 0.8)) == doctest::Approx(2.5).epsilon(1e-13));
    CHECK(curve.eval(0.0) == doctest::Approx(2.5));
  }

  SUBCASE("clamped start equals first control point") {
    FixtureRng rng(10);
    Eigen::VectorXd c(basis.size());
    for (int i = 0; i < c.size(); ++i) c[i] = rng.uniform(-1.0, 1.0);
    SplineCurve curve{basis, c};
    CHECK(curve.eval(0.0) == doctest::Approx(c[0]).epsilon(1e-13));
  }

  SUBCASE("least-squares fit tracks a smooth target curve") {
    // Matches the shape of the simulator's OCV map.
    auto f = [](double z) {
      return 0.03 * std::pow(1.5 - z, -4.0) + 0.1 * std::log(z + 0.01) + 3.0;
    };
    const int m = 2000;
    Eigen::MatrixXd g(m, basis.size());
    Eigen::VectorXd target(m);
    for (int k = 0; k < m; ++k) {
      const double z = 0.8 * k / static_cast<double>(m - 1);
      g.row(k) = basis.eval(z).transpose();
      target[k] = f(z);
    }
    SplineCurve curve{basis, g.colPivHouseholderQr().solve(target)};
    double worst = 0.0;
    for (int k = 0; k < 750; ++k) {
      const double z = 0.05 + (0.8 - 0.05) * k / 749.0;
      worst = std::max(worst, std::abs(curve.eval(z) - f(z)));
    }
    CHECK(worst < 1e-4);
  }
}
