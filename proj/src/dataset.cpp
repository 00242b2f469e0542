#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace lpvbat {

void SampledDataset::validate() const {
  const std::size_t m = size();
  if (m < 2) fail(ErrorCode::InsufficientData, "dataset needs at least 2 samples");
  if (t.size() != m || i_b.size() != m)
    fail(ErrorCode::LengthMismatch, "dataset series lengths differ");
  if (!z.empty() && z.size() != m)
    fail(ErrorCode::LengthMismatch, "dataset SOC length differs");
  if (!z_true.empty() && z_true.size() != m)
    fail(ErrorCode::LengthMismatch, "dataset true-SOC length differs");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dataset dt must be > 0");
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double step = t[k + 1] - t[k];
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      std::ostringstream msg;
      msg << "non-uniform sampling at index " << k << ": step " << step
          << " vs dt " << dt;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  if (!finite(t) || !finite(i_b) || !finite(v_b) || !finite(z) || !finite(z_true))
    fail(ErrorCode::InvalidArgument, "dataset contains NaN/Inf entries");
}

std::vector<double> coulomb_count(std::span<const double> i_b, double dt,
                                  double z0, double capacity_ah) {
  if (!(z0 >= 0.0 && z0 <= 1.0))
    fail(ErrorCode::InvalidArgument, "coulomb_count: z0 must be in [0, 1]");
  if (!(capacity_ah > 0.0))
    fail(ErrorCode::InvalidArgument, "coulomb_count: capacity must be > 0");
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "coulomb_count: dt must be > 0");

  const double gain = dt / (3600.0 * capacity_ah);
  std::vector<double> z(i_b.size());
  double raw = z0;
  for (std::size_t k = 0; k < i_b.size(); ++k) {
    if (k > 0) raw += gain * i_b[k - 1];
    if (raw < -0.001 || raw > 1.001) {
      std::ostringstream msg;
      msg << "coulomb_count: SOC " << raw << " at sample " << k
          << " leaves [-0.001, 1.001]";
      fail(ErrorCode::SocOutOfRange, msg.str());
    }
    z[k] = std::clamp(raw, 0.0, 1.0);
  }
  return z;
}

}  // namespace lpvbat
