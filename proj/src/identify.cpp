#include "identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "metrics.hpp"
#include "svf.hpp"

namespace lpvbat {

namespace {

/// lambda * |D G3 c_block|_1 lifted to the full coefficient vector.
L1Penalty jump_penalty(const Eigen::MatrixXd& dg3, double lambda,
                       Eigen::Index block, Eigen::Index h,
                       Eigen::Index n_total) {
  L1Penalty p;
  p.weight = lambda;
  p.matrix = Eigen::MatrixXd::Zero(dg3.rows(), n_total);
  p.matrix.middleCols(block * h, h) = dg3;
  return p;
}

Eigen::MatrixXd jump_operator(const SplineBasis& basis) {
  return difference_matrix(basis.n_segments()) *
         third_derivative_knot_matrix(basis);
}

}  // namespace

StageResult identify_stage1(const RegressionProblem& problem, double lambda1,
                            double lambda2, double lambda3,
                            const SolverOptions& options) {
  const Eigen::Index h = problem.h();
  const Eigen::MatrixXd dg3 = jump_operator(problem.basis);
  std::vector<L1Penalty> penalties;
  penalties.push_back(jump_penalty(dg3, lambda1, 0, h, 5 * h));
  penalties.push_back(jump_penalty(dg3, lambda2, 1, h, 5 * h));
  penalties.push_back(jump_penalty(dg3, lambda3, 2, h, 5 * h));
  SolverReport report = solve_l1_ls(problem.y, problem.A, penalties, options);
  return StageResult{report.solution, std::move(report)};
}

StageResult identify_stage2(const RegressionProblem& problem,
                            const Eigen::VectorXd& c_dyn_hat, double lambda4,
                            const SolverOptions& options) {
  const Eigen::Index h = problem.h();
  if (c_dyn_hat.size() != 3 * h)
    fail(ErrorCode::LengthMismatch, "identify_stage2: c_dyn must have 3h entries");

  const Eigen::VectorXd psi = problem.y - problem.A.leftCols(3 * h) * c_dyn_hat;

  // a1_hat per sample from the scheduling SOC, then modulate-and-filter.
  const long m = static_cast<long>(problem.z_sched_full.size());
  const long kept = problem.kept_rows();
  const Eigen::MatrixXd g_sched = basis_matrix(problem.basis, problem.z_sched_full);
  const Eigen::VectorXd a1_full = g_sched * c_dyn_hat.head(h);

  Eigen::MatrixXd reg = problem.A.middleCols(3 * h, h);  // F1[g] block
  std::vector<double> product(m);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (long k = 0; k < m; ++k) product[k] = a1_full[k] * g_sched(k, i);
    const std::vector<double> f0 = svf_filter(product, problem.svf, 0);
    for (long k = 0; k < kept; ++k) reg(k, i) -= f0[problem.warmup + k];
  }

  std::vector<L1Penalty> penalties;
  penalties.push_back(L1Penalty{lambda4, jump_operator(problem.basis)});
  SolverReport report = solve_l1_ls(psi, reg, penalties, options);
  return StageResult{report.solution, std::move(report)};
}

PhysicalCurves recover_physical(const IdentifiedModel& model,
                                std::span<const double> grid) {
  PhysicalCurves out;
  out.z.assign(grid.begin(), grid.end());
  const std::size_t n = grid.size();
  out.r0.resize(n);
  out.r1.resize(n);
  out.tau1.resize(n);
  out.voc.resize(n);
  out.valid.resize(n);
  Eigen::VectorXd g(model.basis.size());
  for (std::size_t k = 0; k < n; ++k) {
    model.basis.eval(grid[k], std::span<double>(g.data(), g.size()));
    const double a1 = g.dot(model.c_a1);
    const double b0 = g.dot(model.c_b0);
    const double b1 = g.dot(model.c_b1);
    const double voc = g.dot(model.c_voc);
    const double tau1 = -1.0 / a1;
    const double r0 = b0;
    const double r1 = b1 * tau1 - r0;
    out.r0[k] = r0;
    out.r1[k] = r1;
    out.tau1[k] = tau1;
    out.voc[k] = voc;
    out.valid[k] = (a1 < 0.0 && r1 > 0.0 && std::isfinite(voc)) ? 1 : 0;
  }
  return out;
}

std::vector<double> evaluation_grid(const IdentifiedModel& model, int n_points,
                                    double trim) {
  const double lo = model.basis.z_min() + trim;
  const double hi = model.basis.z_max() - trim;
  if (!(lo < hi))
    fail(ErrorCode::InvalidRange, "evaluation_grid: trim exceeds basis domain");
  std::vector<double> grid(n_points);
  for (int k = 0; k < n_points; ++k)
    grid[k] = lo + (hi - lo) * k / static_cast<double>(n_points - 1);
  return grid;
}

std::vector<double> predict_voltage(const IdentifiedModel& model,
                                    std::span<const double> i_b, double dt,
                                    double z0, double capacity_ah,
                                    bool* domain_clamped) {
  const std::vector<double> z = coulomb_count(i_b, dt, z0, capacity_ah);
  const double lo = model.basis.z_min();
  const double hi = model.basis.z_max();
  bool clamped = false;

  std::vector<double> v(i_b.size());
  Eigen::VectorXd g(model.basis.size());
  double v1 = 0.0;
  for (std::size_t k = 0; k < i_b.size(); ++k) {
    double zk = z[k];
    if (zk < lo || zk > hi) {
      zk = std::clamp(zk, lo, hi);
      clamped = true;
    }
    model.basis.eval(zk, std::span<double>(g.data(), g.size()));
    const double a1 = g.dot(model.c_a1);
    const double b0 = g.dot(model.c_b0);
    const double b1 = g.dot(model.c_b1);
    const double voc = g.dot(model.c_voc);
    const double tau1 = -1.0 / a1;
    const double r1 = b1 * tau1 - b0;
    if (!(tau1 > 0.0))
      fail(ErrorCode::NonpositiveTimeConstant,
           "predict_voltage: identified tau1 <= 0 at SOC " + std::to_string(zk));
    v[k] = v1 + b0 * i_b[k] + voc;
    const double a = std::exp(-dt / tau1);
    v1 = a * v1 + r1 * (1.0 - a) * i_b[k];
  }
  if (domain_clamped) *domain_clamped = clamped;
  return v;
}

IdentifyResult run_identification(SampledDataset& data,
                                  const PipelineConfig& cfg) {
  data.validate();
  if (!data.has_soc())
    data.z = coulomb_count(data.i_b, data.dt, cfg.z0, cfg.capacity_ah);

  double z_lo = cfg.basis_z_min;
  double z_hi = cfg.basis_z_max;
  if (!std::isfinite(z_lo))
    z_lo = *std::min_element(data.z.begin(), data.z.end());
  if (!std::isfinite(z_hi))
    z_hi = *std::max_element(data.z.begin(), data.z.end());
  const SplineBasis basis = SplineBasis::clamped_uniform(z_lo, z_hi, cfg.n_segments);

  RegressionConfig rc;
  rc.svf_cutoff = cfg.nu;
  rc.perturb_sigma = cfg.perturb_sigma;
  rc.seed = cfg.seed;
  rc.perturb_all_blocks = cfg.perturb_all_blocks;
  rc.warmup_override = cfg.warmup_override;
  RegressionProblem problem = build_problem(data, basis, rc);

  StageResult s1 = identify_stage1(problem, cfg.lambda1, cfg.lambda2,
                                   cfg.lambda3, cfg.solver);
  const Eigen::Index h = problem.h();
  const Eigen::VectorXd c_dyn = s1.coefficients.head(3 * h);
  StageResult s2 = identify_stage2(problem, c_dyn, cfg.lambda4, cfg.solver);

  IdentifyResult out;
  out.model.basis = basis;
  out.model.c_a1 = c_dyn.head(h);
  out.model.c_b0 = c_dyn.segment(h, h);
  out.model.c_b1 = c_dyn.segment(2 * h, h);
  out.model.c_voc = s2.coefficients;
  out.model.c_a1voc = s1.coefficients.segment(4 * h, h);
  out.model.meta = ModelMetadata{cfg.nu,          cfg.lambda1, cfg.lambda2,
                                 cfg.lambda3,     cfg.lambda4, cfg.perturb_sigma,
                                 cfg.seed,        problem.warmup, data.dt,
                                 cfg.capacity_ah, data.z.front()};
  out.stage1_report = std::move(s1.report);
  out.stage2_report = std::move(s2.report);
  out.stage1_c_voc = s1.coefficients.segment(3 * h, h);
  out.stage1_c_a1voc = s1.coefficients.segment(4 * h, h);
  out.warmup = problem.warmup;
  out.kept_rows = problem.kept_rows();

  const std::vector<double> v_hat = predict_voltage(
      out.model, data.i_b, data.dt, data.z.front(), cfg.capacity_ah,
      &out.domain_clamped);
  out.training_rmse = rmse(data.v_b, v_hat, RmseVariant::SamplesPlusOne);
  out.training_rmse_m = rmse(data.v_b, v_hat, RmseVariant::Samples);
  out.training_vaf = vaf(data.v_b, v_hat, VafVariant::VarEstimate);
  out.training_vaf_ref = vaf(data.v_b, v_hat, VafVariant::VarReference);
  return out;
}

}  // namespace lpvbat
