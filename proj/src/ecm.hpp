#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dataset.hpp"

namespace lpvbat {

/// Closed-form SOC-dependent cell description used as simulator ground
/// truth: series resistance, RC-branch resistance, RC time constant and
/// open-circuit voltage, each as a function of SOC.
struct EcmTruth {
  std::function<double(double)> r0;    // Ohm
  std::function<double(double)> r1;    // Ohm
  std::function<double(double)> tau1;  // s
  std::function<double(double)> voc;   // V
  double capacity_ah = 2.0;
};

/// Built-in synthetic cell with smoothly varying parameters and a
/// monotone OCV curve.
EcmTruth default_truth(double capacity_ah = 2.0);

/// Constant-parameter cell (LTI battery), mainly for oracle tests.
EcmTruth constant_truth(double r0, double r1, double tau1, double voc,
                        double capacity_ah = 2.0);

struct CurrentProfile {
  enum class Kind { DstLike, Constant, Prbs };

  Kind kind = Kind::Constant;
  double base_step = 1.0;        // s
  double amplitude_scale = 1.0;  // A
  std::vector<std::pair<double, double>> schedule;  // (duration s, current A)

  double duration() const;
  /// ZOH lookup; segments cover [start, start+duration). Returns 0 past
  /// the end.
  double current_at(double t) const;

  void validate() const;
};

/// The repeating discharge-dominated drive cycle (360 s per cycle) used by
/// the simulator, scaled by amplitude_scale and truncated to duration.
CurrentProfile dst_profile(double duration_s, double amplitude_scale = 1.0);
CurrentProfile constant_profile(double duration_s, double amps);
CurrentProfile prbs_profile(double duration_s, double amplitude,
                            double base_step, std::uint64_t seed);
CurrentProfile generate_profile(CurrentProfile::Kind kind, double duration_s,
                                double amplitude_scale, std::uint64_t seed,
                                double base_step = 10.0);

/// Charge drained by one 360 s cycle of the unscaled drive pattern, in
/// Ampere-seconds (negative).
double dst_cycle_charge_as();
double dst_cycle_duration_s();

struct SimulateOptions {
  double z0 = 0.8;
  double dt = 1.0;
  double noise_std = 0.01;  // applied to recorded current (A) and voltage (V)
  std::uint64_t seed = 1;
  double z_floor = 0.001;  // stop before SOC drops below this
};

/// Integrates the single-RC cell exactly under ZOH current, with parameters
/// frozen at z(t_k) over each interval and v1(0) = 0. Gaussian measurement
/// noise is added to the recorded current/voltage copies only; z_true keeps
/// the clean SOC trajectory. The run stops when the profile ends or SOC
/// would cross z_floor.
SampledDataset simulate(const EcmTruth& truth, const CurrentProfile& profile,
                        const SimulateOptions& options = {});

}  // namespace lpvbat
