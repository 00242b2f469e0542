#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dataset.hpp"
#include "ecm.hpp"
#include "errors.hpp"
#include "regression.hpp"
#include "spline.hpp"
#include "support/oracles.hpp"

using namespace lpvbat;

namespace {

SampledDataset lti_dataset(double dt, double duration, double capacity) {
  const EcmTruth truth = constant_truth(0.1, 0.3, 18.0, 3.6, capacity);
  SimulateOptions opts;
  opts.noise_std = 0.0;
  opts.z0 = 0.8;
  opts.dt = dt;
  SampledDataset ds = simulate(truth, dst_profile(duration, 1.0), opts);
  ds.z = coulomb_count(ds.i_b, ds.dt, 0.8, capacity);
  return ds;
}

}  // namespace

TEST_CASE("perturb_soc") {
  std::vector<double> z(20000, 0.5);

  SUBCASE("sigma zero is the identity") {
    const auto out = perturb_soc(z, 0.0, 7, 0.0, 1.0);
    CHECK(out == z);
  }
  SUBCASE("sample std near the requested sigma") {
    const auto out = perturb_soc(z, 1e-4, 7, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double d = out[k] - z[k];
      acc += d * d;
    }
    const double std_hat = std::sqrt(acc / z.size());
    CHECK(std_hat > 0.8e-4);
    CHECK(std_hat < 1.2e-4);
  }
  SUBCASE("deterministic per seed") {
    CHECK(perturb_soc(z, 1e-4, 9, 0.0, 1.0) == perturb_soc(z, 1e-4, 9, 0.0, 1.0));
    CHECK(perturb_soc(z, 1e-4, 9, 0.0, 1.0) != perturb_soc(z, 1e-4, 10, 0.0, 1.0));
  }
  SUBCASE("clamped to the domain") {
    std::vector<double> edge(1000, 0.99995);
    const auto out = perturb_soc(edge, 1e-3, 3, 0.0, 1.0);
    for (double v : out) CHECK(v <= 1.0);
  }
}

TEST_CASE("problem assembly on an LTI cell") {
  const SampledDataset ds = lti_dataset(0.25, 720.0, 2.0);
  const auto basis = SplineBasis::clamped_uniform(
      *std::min_element(ds.z.begin(), ds.z.end()),
      *std::max_element(ds.z.begin(), ds.z.end()), 6);

  RegressionConfig cfg;
  cfg.svf_cutoff = 1e-3;
  cfg.perturb_sigma = 1e-4;
  cfg.seed = 5;
  cfg.warmup_override = 100;
  const RegressionProblem prob = build_problem(ds, basis, cfg);

  const int h = prob.h();
  REQUIRE(prob.A.cols() == 5 * h);
  REQUIRE(prob.A.rows() == static_cast<long>(ds.size()) - 100);

  SUBCASE("residual equals the closed-form staircase defect") {
    // Holding the sampled voltage constant between samples (its true shape
    // is exponential there) leaves a known equation error:
    //   r = R1 [(1-a) - (1-b)/(nu tau)] q^-1 (1-q^-1)
    //       / ((1-a q^-1)(1-b q^-1)) * i
    // with a, b the cell and filter ZOH poles. The assembled residual must
    // match it to rounding, which pins every block of A at once.
    const double a1 = -1.0 / 18.0;
    const double b0 = 0.1;
    const double b1 = (0.1 + 0.3) / 18.0;
    Eigen::VectorXd c(5 * h);
    c.segment(0 * h, h).setConstant(a1);
    c.segment(1 * h, h).setConstant(b0);
    c.segment(2 * h, h).setConstant(b1);
    c.segment(3 * h, h).setConstant(3.6);
    c.segment(4 * h, h).setConstant(-a1 * 3.6);  // the F0[g] block carries -(a1 voc)
    const Eigen::VectorXd resid = prob.y - prob.A * c;

    const double nu = prob.svf.cutoff;
    const double alpha = std::exp(-ds.dt / 18.0);
    const double beta = std::exp(-nu * ds.dt);
    const double gain = 0.3 * ((1.0 - alpha) - (1.0 - beta) / (nu * 18.0));
    std::vector<double> defect(ds.size(), 0.0);
    if (ds.size() > 1) defect[1] = gain * ds.i_b[0];
    for (std::size_t k = 2; k < ds.size(); ++k)
      defect[k] = (alpha + beta) * defect[k - 1] - alpha * beta * defect[k - 2] +
                  gain * (ds.i_b[k - 1] - ds.i_b[k - 2]);
    double worst = 0.0;
    for (long k = 0; k < prob.kept_rows(); ++k)
      worst = std::max(worst,
                       std::abs(resid[k] - defect[prob.sample_index[k]]));
    CHECK(worst < 1e-9 * prob.y.norm() / std::sqrt(double(prob.kept_rows())));
  }

  SUBCASE("with no RC branch the staircase is exact and the residual vanishes") {
    const EcmTruth truth = constant_truth(0.1, 0.0, 18.0, 3.6, 2.0);
    SimulateOptions opts;
    opts.noise_std = 0.0;
    opts.z0 = 0.8;
    opts.dt = 1.0;
    SampledDataset flat = simulate(truth, dst_profile(720.0, 1.0), opts);
    flat.z = coulomb_count(flat.i_b, flat.dt, 0.8, 2.0);
    const auto b2 = SplineBasis::clamped_uniform(
        *std::min_element(flat.z.begin(), flat.z.end()),
        *std::max_element(flat.z.begin(), flat.z.end()), 6);
    const RegressionProblem p2 = build_problem(flat, b2, cfg);
    const int hh = p2.h();
    Eigen::VectorXd c(5 * hh);
    c.segment(0 * hh, hh).setConstant(-1.0 / 18.0);
    c.segment(1 * hh, hh).setConstant(0.1);
    c.segment(2 * hh, hh).setConstant(0.1 / 18.0);
    c.segment(3 * hh, hh).setConstant(3.6);
    c.segment(4 * hh, hh).setConstant(3.6 / 18.0);
    CHECK((p2.y - p2.A * c).norm() < 1e-12 * p2.y.norm());
  }

  SUBCASE("block pair identity") {
    const double nu = prob.svf.cutoff;
    for (long k = 0; k < prob.kept_rows(); k += 97) {
      const long orig = prob.sample_index[k];
      for (int i = 0; i < h; ++i) {
        const double lhs = prob.A(k, h + i) + nu * prob.A(k, 2 * h + i);
        const double want = basis.eval(ds.z[orig])[i] * ds.i_b[orig];
        const double scale = std::max(1.0, std::abs(want));
        CHECK(std::abs(lhs - want) <= 4.6e-16 * scale);
      }
    }
  }

  SUBCASE("fifth block row sums follow the filtered partition of unity") {
    const double nu = prob.svf.cutoff;
    for (long k = 0; k < prob.kept_rows(); k += 499) {
      const double t = ds.t[prob.sample_index[k]];  // zero-state response
      const double want = (1.0 - std::exp(-nu * t)) / nu;
      const double got = prob.A.row(k).segment(4 * h, h).sum();
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }

  SUBCASE("reproducible") {
    const RegressionProblem again = build_problem(ds, basis, cfg);
    CHECK((again.A - prob.A).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((again.y - prob.y).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("constant voltage with zero current decays through the target") {
  SampledDataset ds;
  ds.dt = 1.0;
  const int m = 250;
  for (int k = 0; k < m; ++k) {
    ds.t.push_back(k);
    ds.i_b.push_back(0.0);
    ds.v_b.push_back(3.6);
    ds.z.push_back(0.5 + 1e-5 * k);  // gentle sweep to keep the basis happy
  }
  const auto basis = SplineBasis::clamped_uniform(0.5, 0.5 + 1e-5 * (m - 1), 1);
  RegressionConfig cfg;
  cfg.svf_cutoff = 0.5;
  cfg.perturb_sigma = 0.0;
  cfg.warmup_override = 40;  // e^(-20) * 3.6 is far below the tolerance
  const RegressionProblem prob = build_problem(ds, basis, cfg);
  for (long k = 0; k < prob.kept_rows(); ++k) CHECK(std::abs(prob.y[k]) < 1e-6);
}

TEST_CASE("insufficient data reported with the computed threshold") {
  const SampledDataset ds = lti_dataset(1.0, 300.0, 2.0);
  const auto basis = SplineBasis::clamped_uniform(0.0, 0.9, 10);
  RegressionConfig cfg;
  cfg.svf_cutoff = 1e-3;  // automatic warm-up of 5000 exceeds the data
  try {
    build_problem(ds, basis, cfg);
    FAIL("expected InsufficientData");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
    CHECK(std::string(e.what()).find("5000") != std::string::npos);
  }
}

TEST_CASE("scheduling SOC outside the basis domain names the sample") {
  SampledDataset ds = lti_dataset(1.0, 360.0, 2.0);
  const auto basis = SplineBasis::clamped_uniform(0.79, 0.81, 4);
  RegressionConfig cfg;
  cfg.warmup_override = 0;
  CHECK_THROWS_AS(build_problem(ds, basis, cfg), Error);
}
