#pragma once

#include <span>
#include <vector>

namespace lpvbat {

/// Uniformly sampled current/voltage record. Current is in Ampere with
/// charging positive, voltage in Volt, time in seconds. `z` is the SOC
/// series used as the scheduling signal (filled by coulomb counting when
/// absent); `z_true` carries simulator ground truth and is never used for
/// scheduling.
struct SampledDataset {
  std::vector<double> t;
  std::vector<double> i_b;
  std::vector<double> v_b;
  std::vector<double> z;
  std::vector<double> z_true;
  double dt = 1.0;

  std::size_t size() const { return v_b.size(); }
  bool has_soc() const { return !z.empty(); }

  /// Checks equal lengths (>= 2), uniform dt to 1e-9 relative, and that all
  /// entries are finite.
  void validate() const;
};

/// Left-sum charge integration: z[0] = z0,
/// z[k] = z[k-1] + dt * i_b[k-1] / (3600 * capacity_ah), clipped to [0, 1].
/// Fails with SocOutOfRange if the raw sum leaves [-0.001, 1.001].
std::vector<double> coulomb_count(std::span<const double> i_b, double dt,
                                  double z0, double capacity_ah);

}  // namespace lpvbat
