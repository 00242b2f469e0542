#include "regression.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace lpvbat {

std::vector<double> perturb_soc(std::span<const double> z, double sigma,
                                std::uint64_t seed, double z_min, double z_max) {
  if (sigma < 0.0)
    fail(ErrorCode::InvalidArgument, "perturb_soc: sigma must be >= 0");
  std::vector<double> out(z.begin(), z.end());
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (double& v : out) v = std::clamp(v + gauss(rng), z_min, z_max);
  return out;
}

long effective_warmup(const RegressionConfig& cfg, double dt) {
  if (cfg.warmup_override >= 0) return cfg.warmup_override;
  return svf_warmup_length(SvfConfig{cfg.svf_cutoff, 1, dt});
}

RegressionProblem build_problem(const SampledDataset& data,
                                const SplineBasis& basis,
                                const RegressionConfig& cfg) {
  data.validate();
  if (!data.has_soc())
    fail(ErrorCode::InvalidArgument,
         "build_problem: dataset has no SOC series; run coulomb counting first");

  const long m = static_cast<long>(data.size());
  const int h = basis.size();
  const long warmup = effective_warmup(cfg, data.dt);
  const long kept = m - warmup;
  if (kept < 5L * h) {
    std::ostringstream msg;
    msg << "build_problem: " << m << " samples minus " << warmup
        << " warm-up rows leaves " << kept << ", need at least " << 5 * h;
    fail(ErrorCode::InsufficientData, msg.str());
  }

  for (long k = 0; k < m; ++k)
    if (!basis.in_domain(data.z[k])) {
      std::ostringstream msg;
      msg << "build_problem: SOC " << data.z[k] << " at sample " << k
          << " outside basis domain [" << basis.z_min() << ", "
          << basis.z_max() << "]";
      fail(ErrorCode::OutOfDomain, msg.str());
    }

  RegressionProblem prob;
  prob.basis = basis;
  prob.svf = SvfConfig{cfg.svf_cutoff, 1, data.dt};
  prob.warmup = warmup;
  prob.z_sched_full =
      perturb_soc(data.z, cfg.perturb_sigma, cfg.seed, basis.z_min(), basis.z_max());

  const std::vector<double>& z_mod = cfg.perturb_all_blocks ? prob.z_sched_full : data.z;

  const double nu = cfg.svf_cutoff;
  const Eigen::MatrixXd g_mod = basis_matrix(basis, z_mod);
  const Eigen::MatrixXd g_sched = basis_matrix(basis, prob.z_sched_full);

  prob.A.resize(kept, 5L * h);
  std::vector<double> product(m);
  for (int i = 0; i < h; ++i) {
    // F0[g v_b] and the F1/F0 pair of g i_b share the per-sample products.
    for (long k = 0; k < m; ++k) product[k] = g_mod(k, i) * data.v_b[k];
    std::vector<double> f0 = svf_filter(product, prob.svf, 0);
    for (long k = 0; k < kept; ++k) prob.A(k, i) = f0[warmup + k];

    for (long k = 0; k < m; ++k) product[k] = g_mod(k, i) * data.i_b[k];
    f0 = svf_filter(product, prob.svf, 0);
    for (long k = 0; k < kept; ++k) {
      const long kk = warmup + k;
      prob.A(k, h + i) = product[kk] - nu * f0[kk];  // F1 = id - nu F0
      prob.A(k, 2L * h + i) = f0[kk];
    }

    for (long k = 0; k < m; ++k) product[k] = g_sched(k, i);
    f0 = svf_filter(product, prob.svf, 0);
    for (long k = 0; k < kept; ++k) {
      const long kk = warmup + k;
      prob.A(k, 3L * h + i) = product[kk] - nu * f0[kk];
      prob.A(k, 4L * h + i) = f0[kk];
    }
  }

  const std::vector<double> y_full = svf_filter(data.v_b, prob.svf, 1);
  prob.y.resize(kept);
  prob.sample_index.resize(kept);
  for (long k = 0; k < kept; ++k) {
    prob.y[k] = y_full[warmup + k];
    prob.sample_index[k] = warmup + k;
  }

  if (!prob.A.allFinite() || !prob.y.allFinite())
    fail(ErrorCode::InvalidArgument, "build_problem: non-finite regression entries");
  return prob;
}

}  // namespace lpvbat
