#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"
#include "spline.hpp"
#include "svf.hpp"

namespace lpvbat {

struct RegressionConfig {
  double svf_cutoff = 1e-3;     // rad/s
  double perturb_sigma = 1e-4;  // SOC std for the scheduling perturbation
  std::uint64_t seed = 0;
  /// Perturbed SOC is used for the pure-basis blocks (4-5) only by default;
  /// set to also perturb the modulated-signal blocks (1-3).
  bool perturb_all_blocks = false;
  /// Rows discarded from the head of every series; < 0 selects the
  /// automatic svf_warmup_length(cfg).
  long warmup_override = -1;
};

/// Prefiltered least-squares data for one identification run. Column blocks
/// of A, each basis-width h:
///   [ F0[g v_b] | F1[g i_b] | F0[g i_b] | F1[g] | F0[g] ]
/// matching the coefficient layout [c_a1 | c_b0 | c_b1 | c_voc | c_a1voc].
struct RegressionProblem {
  Eigen::VectorXd y;  // F1[v_b], rows after warm-up discard
  Eigen::MatrixXd A;  // m' x 5h
  SplineBasis basis;
  SvfConfig svf;
  long warmup = 0;
  std::vector<long> sample_index;    // original sample index per kept row
  std::vector<double> z_sched_full;  // perturbed SOC, full length (pre-discard)

  int h() const { return basis.size(); }
  long kept_rows() const { return static_cast<long>(y.size()); }
};

/// Adds clamped i.i.d. Gaussian jitter to the scheduling signal. sigma = 0
/// returns the input unchanged.
std::vector<double> perturb_soc(std::span<const double> z, double sigma,
                                std::uint64_t seed, double z_min, double z_max);

/// Forms the modulated signals sample-wise, filters them (products first,
/// then filter), stacks the five column blocks and discards warm-up rows.
RegressionProblem build_problem(const SampledDataset& data,
                                const SplineBasis& basis,
                                const RegressionConfig& cfg);

/// Effective warm-up row count for a dataset/config pair.
long effective_warmup(const RegressionConfig& cfg, double dt);

}  // namespace lpvbat
