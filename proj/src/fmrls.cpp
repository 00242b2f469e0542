#include "fmrls.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace lpvbat {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct ThetaMap {
  double r0, r1, tau1, voc;
  bool valid;
};

ThetaMap map_theta(const Eigen::Vector4d& th, double dt) {
  const double th1 = th[0];
  if (!(th1 > 0.0 && th1 < 1.0) || !th.allFinite())
    return {kNan, kNan, kNan, kNan, false};
  const double denom = 1.0 - th1;
  ThetaMap out;
  out.tau1 = -dt / std::log(th1);
  out.r0 = th[1];
  out.voc = th[3] / denom;
  out.r1 = (th[2] + th1 * th[1]) / denom;
  out.valid = true;
  return out;
}

}  // namespace

FmrlsResult fmrls_identify(const SampledDataset& data, const FmrlsConfig& cfg) {
  data.validate();
  const long m = static_cast<long>(data.size());
  if (!cfg.forgetting) {
    if (cfg.window < 8)
      fail(ErrorCode::InvalidArgument, "fmrls: window must be >= 8");
    if (cfg.window >= m)
      fail(ErrorCode::WindowTooLong, "fmrls: window exceeds dataset length");
  }

  FmrlsResult out;
  out.r0.assign(m, kNan);
  out.r1.assign(m, kNan);
  out.tau1.assign(m, kNan);
  out.voc.assign(m, kNan);
  out.valid.assign(m, 0);

  const auto emit = [&](long k, const Eigen::Vector4d& th) {
    const ThetaMap pm = map_theta(th, data.dt);
    out.r0[k] = pm.r0;
    out.r1[k] = pm.r1;
    out.tau1[k] = pm.tau1;
    out.voc[k] = pm.voc;
    out.valid[k] = pm.valid ? 1 : 0;
  };

  if (cfg.forgetting) {
    const double lam = cfg.forgetting_factor;
    if (!(lam > 0.0 && lam <= 1.0))
      fail(ErrorCode::InvalidArgument, "fmrls: forgetting factor must be in (0, 1]");
    Eigen::Matrix4d p = 1e6 * Eigen::Matrix4d::Identity();
    Eigen::Vector4d th = Eigen::Vector4d::Zero();
    for (long k = 1; k < m; ++k) {
      Eigen::Vector4d phi(data.v_b[k - 1], data.i_b[k], data.i_b[k - 1], 1.0);
      const double denom = lam + phi.dot(p * phi);
      const Eigen::Vector4d gain = p * phi / denom;
      th += gain * (data.v_b[k] - phi.dot(th));
      p = (p - gain * phi.transpose() * p) / lam;
      if (k >= 16) emit(k, th);  // let the covariance settle first
    }
    return out;
  }

  const long n = cfg.window;
  // Fresh accumulation per window keeps the outputs free of rolling
  // round-off, making a one-sample dataset shift an exact output shift.
  for (long k = n; k < m; ++k) {
    Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
    Eigen::Vector4d atb = Eigen::Vector4d::Zero();
    for (long j = k - n + 1; j <= k; ++j) {
      Eigen::Vector4d phi(data.v_b[j - 1], data.i_b[j], data.i_b[j - 1], 1.0);
      ata.selfadjointView<Eigen::Lower>().rankUpdate(phi);
      atb += phi * data.v_b[j];
    }
    Eigen::Matrix4d reg = ata.selfadjointView<Eigen::Lower>();
    reg.diagonal().array() += cfg.ridge;
    const Eigen::Vector4d th = reg.ldlt().solve(atb);
    emit(k, th);
  }
  return out;
}

GridCurves bin_estimates(std::span<const double> z_samples,
                         const FmrlsResult& estimates,
                         std::span<const double> grid) {
  if (z_samples.size() != estimates.r0.size())
    fail(ErrorCode::LengthMismatch, "bin_estimates: SOC/estimate lengths differ");
  if (grid.size() < 2)
    fail(ErrorCode::InvalidArgument, "bin_estimates: grid needs >= 2 points");

  const std::size_t g = grid.size();
  GridCurves out;
  out.z.assign(grid.begin(), grid.end());
  out.r0.assign(g, 0.0);
  out.r1.assign(g, 0.0);
  out.tau1.assign(g, 0.0);
  out.voc.assign(g, 0.0);
  out.populated.assign(g, 0);
  std::vector<long> hits(g, 0);

  const double lo = grid.front(), hi = grid.back();
  const double step = (hi - lo) / static_cast<double>(g - 1);
  for (std::size_t k = 0; k < z_samples.size(); ++k) {
    if (!estimates.valid[k]) continue;
    const double zk = z_samples[k];
    if (zk < lo - 0.5 * step || zk > hi + 0.5 * step) continue;
    const long cell = std::clamp<long>(std::lround((zk - lo) / step), 0,
                                       static_cast<long>(g) - 1);
    out.r0[cell] += estimates.r0[k];
    out.r1[cell] += estimates.r1[k];
    out.tau1[cell] += estimates.tau1[k];
    out.voc[cell] += estimates.voc[k];
    ++hits[cell];
  }
  for (std::size_t c = 0; c < g; ++c) {
    if (hits[c] > 0) {
      out.r0[c] /= hits[c];
      out.r1[c] /= hits[c];
      out.tau1[c] /= hits[c];
      out.voc[c] /= hits[c];
      out.populated[c] = 1;
    }
  }
  // Fill gaps from the nearest populated cell.
  long last = -1;
  for (std::size_t c = 0; c < g; ++c) {
    if (out.populated[c]) {
      if (last < 0) {
        for (long b = 0; b < static_cast<long>(c); ++b) {
          out.r0[b] = out.r0[c];
          out.r1[b] = out.r1[c];
          out.tau1[b] = out.tau1[c];
          out.voc[b] = out.voc[c];
        }
      } else {
        for (long b = last + 1; b < static_cast<long>(c); ++b) {
          const long src =
              (static_cast<long>(c) - b <= b - last) ? static_cast<long>(c) : last;
          out.r0[b] = out.r0[src];
          out.r1[b] = out.r1[src];
          out.tau1[b] = out.tau1[src];
          out.voc[b] = out.voc[src];
        }
      }
      last = static_cast<long>(c);
    }
  }
  if (last < 0)
    fail(ErrorCode::InsufficientData, "bin_estimates: no valid estimates to bin");
  for (long b = last + 1; b < static_cast<long>(g); ++b) {
    out.r0[b] = out.r0[last];
    out.r1[b] = out.r1[last];
    out.tau1[b] = out.tau1[last];
    out.voc[b] = out.voc[last];
  }
  return out;
}

std::vector<double> predict_voltage_binned(const GridCurves& curves,
                                           std::span<const double> i_b,
                                           double dt, double z0,
                                           double capacity_ah) {
  const std::vector<double> z = coulomb_count(i_b, dt, z0, capacity_ah);
  const std::size_t g = curves.z.size();
  const double lo = curves.z.front(), hi = curves.z.back();
  const double step = (hi - lo) / static_cast<double>(g - 1);

  std::vector<double> v(i_b.size());
  double v1 = 0.0;
  for (std::size_t k = 0; k < i_b.size(); ++k) {
    const double zk = std::clamp(z[k], lo, hi);
    const long cell = std::clamp<long>(std::lround((zk - lo) / step), 0,
                                       static_cast<long>(g) - 1);
    const double tau1 = curves.tau1[cell];
    if (!(tau1 > 0.0))
      fail(ErrorCode::NonpositiveTimeConstant,
           "predict_voltage_binned: binned tau1 <= 0");
    v[k] = v1 + curves.r0[cell] * i_b[k] + curves.voc[cell];
    const double a = std::exp(-dt / tau1);
    v1 = a * v1 + curves.r1[cell] * (1.0 - a) * i_b[k];
  }
  return v;
}

}  // namespace lpvbat
