#pragma once

#include <span>
#include <vector>

namespace lpvbat {

/// State variable filter bank 1/(s + cutoff)^order, sampled with exact
/// zero-order-hold discretization so piecewise-constant inputs incur no
/// integration error.
struct SvfConfig {
  double cutoff = 1e-3;  // rad/s
  int order = 1;
  double dt = 1.0;  // s
};

/// Applies F_j = s^j / (s + cutoff)^order to the ZOH interpolation of the
/// input samples, 0 <= j <= order. Zero initial filter state; output is
/// sampled at the input timestamps.
std::vector<double> svf_filter(std::span<const double> signal,
                               const SvfConfig& cfg, int j);

/// Number of leading samples whose zero-initial-state transient exceeds
/// e^-5 of its starting size: ceil(5 / (cutoff * dt)).
long svf_warmup_length(const SvfConfig& cfg);

}  // namespace lpvbat
