#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"

namespace lpvbat {

struct FmrlsConfig {
  int window = 200;       // samples per sliding rectangular window
  double ridge = 1e-8;    // added to the 4x4 normal matrix diagonal
  bool forgetting = false;       // exponential forgetting instead of a window
  double forgetting_factor = 0.995;
};

/// Per-sample parameter estimates from the discrete-time benchmark
/// identifier. Entries before the first full window, and windows whose
/// DT pole leaves (0, 1), are NaN with valid = 0.
struct FmrlsResult {
  std::vector<double> r0, r1, tau1, voc;
  std::vector<std::uint8_t> valid;
};

/// Sliding-window least squares on the first-order ARX-with-offset form
///   v_b[k] = th1 v_b[k-1] + th2 i_b[k] + th3 i_b[k-1] + th4,
/// mapped back to physical parameters through the exact ZOH inverse
///   tau1 = -dt/ln(th1), R0 = th2, voc = th4/(1-th1),
///   R1 = (th3 + th1 th2)/(1-th1).
/// Each window is re-accumulated from scratch, so shifting the dataset
/// start shifts the outputs sample-for-sample.
FmrlsResult fmrls_identify(const SampledDataset& data, const FmrlsConfig& cfg);

/// Collapses per-sample estimates into curves on a SOC grid by averaging
/// the valid estimates whose SOC falls nearest each grid cell; cells with
/// no hits are filled from the nearest populated cell.
struct GridCurves {
  std::vector<double> z, r0, r1, tau1, voc;
  std::vector<std::uint8_t> populated;
};
GridCurves bin_estimates(std::span<const double> z_samples,
                         const FmrlsResult& estimates,
                         std::span<const double> grid);

/// Voltage prediction that schedules the binned baseline curves by
/// coulomb-counted SOC (nearest-cell lookup) and integrates the RC state
/// exactly, mirroring the LPV predictor.
std::vector<double> predict_voltage_binned(const GridCurves& curves,
                                           std::span<const double> i_b,
                                           double dt, double z0,
                                           double capacity_ah);

}  // namespace lpvbat
