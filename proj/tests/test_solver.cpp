#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "solver.hpp"
#include "support/oracles.hpp"

using namespace lpvbat;
using lpvbat::testing::FixtureRng;
using lpvbat::testing::l1ls_objective;
using lpvbat::testing::reference_l1ls;

namespace {

Eigen::MatrixXd random_matrix(FixtureRng& rng, int rows, int cols, double lo,
                              double hi) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("difference matrix") {
  const Eigen::MatrixXd d = difference_matrix(3);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 3);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(0, 1) == -1.0);
  CHECK(d(0, 2) == 0.0);
  CHECK(d(1, 0) == 0.0);
  CHECK(d(1, 1) == 1.0);
  CHECK(d(1, 2) == -1.0);

  const Eigen::Vector3d constant(4.0, 4.0, 4.0);
  CHECK((d * constant).norm() == 0.0);
  const Eigen::Vector3d v(1.0, 2.0, 4.0);
  const Eigen::Vector2d dv = d * v;
  CHECK(dv[0] == -1.0);
  CHECK(dv[1] == -2.0);

  CHECK_THROWS_AS(difference_matrix(1), Error);
}

TEST_CASE("plain least squares when all weights vanish") {
  FixtureRng rng(13);
  const Eigen::MatrixXd a = random_matrix(rng, 40, 12, -1.0, 1.0);
  Eigen::VectorXd y(40);
  for (int k = 0; k < 40; ++k) y[k] = rng.uniform(-2.0, 2.0);

  std::vector<L1Penalty> penalties;
  penalties.push_back({0.0, difference_matrix(12)});
  const SolverReport rep = solve_l1_ls(y, a, penalties);
  CHECK(rep.converged);
  const Eigen::VectorXd grad = a.transpose() * (y - a * rep.solution);
  CHECK(grad.norm() < 1e-8 * (a.transpose() * y).norm());

  SUBCASE("scaling y and A leaves the solution unchanged") {
    const SolverReport rep2 = solve_l1_ls(5.0 * y, 5.0 * a, penalties);
    CHECK((rep2.solution - rep.solution).lpNorm<Eigen::Infinity>() < 1e-10);
    const double r1 = (y - a * rep.solution).norm();
    const double r2 = (5.0 * y - 5.0 * a * rep2.solution).norm();
    CHECK(r2 == doctest::Approx(5.0 * r1).epsilon(1e-9));
  }
}

TEST_CASE("identity problem reduces to soft thresholding") {
  FixtureRng rng(29);
  const int n = 16;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd y(n);
  for (int k = 0; k < n; ++k) y[k] = rng.uniform(-2.0, 2.0);

  for (double lambda : {0.1, 0.5, 1.3}) {
    std::vector<L1Penalty> penalties{{lambda, eye}};
    SolverOptions opts;
    opts.tol = 1e-12;
    const SolverReport rep = solve_l1_ls(y, eye, penalties, opts);
    CHECK(rep.converged);
    for (int k = 0; k < n; ++k) {
      const double want =
          std::copysign(std::max(std::abs(y[k]) - lambda, 0.0), y[k]);
      CHECK(rep.solution[k] == doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("matches the slow reference solver on random problems") {
  FixtureRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = rng.integer(4, 14);
    const int m = n + rng.integer(2, 12);
    const Eigen::MatrixXd a = random_matrix(rng, m, n, -1.0, 1.0);
    Eigen::VectorXd y(m);
    for (int k = 0; k < m; ++k) y[k] = rng.uniform(-2.0, 2.0);

    std::vector<L1Penalty> penalties;
    penalties.push_back({rng.uniform(0.01, 0.6), difference_matrix(n)});
    if (trial % 2 == 0)
      penalties.push_back(
          {rng.uniform(0.01, 0.3), random_matrix(rng, rng.integer(2, n), n, -1.0, 1.0)});

    const SolverReport rep = solve_l1_ls(y, a, penalties);
    const Eigen::VectorXd ref = reference_l1ls(y, a, penalties, 300000);
    const double got = l1ls_objective(y, a, penalties, rep.solution);
    const double want = l1ls_objective(y, a, penalties, ref);
    CHECK(got <= want * (1.0 + 1e-6) + 1e-12);
    CHECK(got >= want * (1.0 - 1e-6) - 1e-12);
  }
}

TEST_CASE("objective trace is monotone and beats trivial candidates") {
  FixtureRng rng(37);
  const int n = 10, m = 25;
  const Eigen::MatrixXd a = random_matrix(rng, m, n, -1.0, 1.0);
  Eigen::VectorXd y(m);
  for (int k = 0; k < m; ++k) y[k] = rng.uniform(-2.0, 2.0);
  std::vector<L1Penalty> penalties{{0.2, difference_matrix(n)}};

  const SolverReport rep = solve_l1_ls(y, a, penalties);
  REQUIRE(!rep.objective_trace.empty());
  for (std::size_t k = 1; k < rep.objective_trace.size(); ++k)
    CHECK(rep.objective_trace[k] <= rep.objective_trace[k - 1] + 1e-10);

  const double at_zero =
      l1ls_objective(y, a, penalties, Eigen::VectorXd::Zero(n));
  CHECK(rep.objective <= at_zero);
  const SolverReport plain = solve_l1_ls(y, a, {});
  CHECK(rep.objective <= l1ls_objective(y, a, penalties, plain.solution) + 1e-12);
}

TEST_CASE("subgradient certificate at the solution") {
  FixtureRng rng(41);
  const int n = 12, m = 30;
  // columns kept near unit scale so the certificate bound is meaningful
  const Eigen::MatrixXd a = random_matrix(rng, m, n, -1.0, 1.0);
  Eigen::VectorXd y(m);
  for (int k = 0; k < m; ++k) y[k] = rng.uniform(-2.0, 2.0);
  std::vector<L1Penalty> penalties{{0.15, difference_matrix(n)}};

  SolverOptions opts;
  opts.tol = 1e-10;
  const SolverReport rep = solve_l1_ls(y, a, penalties, opts);
  REQUIRE(rep.subgradients.size() == 1);
  const Eigen::VectorXd s = rep.subgradients[0];
  CHECK(s.lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);

  const Eigen::VectorXd pc = penalties[0].matrix * rep.solution;
  for (int r = 0; r < pc.size(); ++r)
    if (std::abs(pc[r]) > 1e-6) CHECK(s[r] == doctest::Approx(pc[r] > 0 ? 1.0 : -1.0).epsilon(1e-4));

  const Eigen::VectorXd kkt = a.transpose() * (a * rep.solution - y) +
                              penalties[0].weight * penalties[0].matrix.transpose() * s;
  CHECK(kkt.norm() <= 1e-6 * (1.0 + (a.transpose() * y).norm()));
}

TEST_CASE("argument validation") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  CHECK_THROWS_AS(solve_l1_ls(y, a, {}), Error);

  Eigen::VectorXd y3 = Eigen::VectorXd::Ones(3);
  std::vector<L1Penalty> bad{{-1.0, Eigen::MatrixXd::Identity(3, 3)}};
  CHECK_THROWS_AS(solve_l1_ls(y3, a, bad), Error);
  std::vector<L1Penalty> mismatched{{1.0, Eigen::MatrixXd::Identity(4, 4)}};
  CHECK_THROWS_AS(solve_l1_ls(y3, a, mismatched), Error);
}
