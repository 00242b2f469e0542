#include "svf.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"

namespace lpvbat {

namespace {

void check_config(const SvfConfig& cfg) {
  if (!(cfg.cutoff > 0.0))
    fail(ErrorCode::InvalidArgument, "svf: cutoff must be > 0");
  if (cfg.order < 1) fail(ErrorCode::InvalidArgument, "svf: order must be >= 1");
  if (!(cfg.dt > 0.0)) fail(ErrorCode::InvalidArgument, "svf: dt must be > 0");
  if (cfg.cutoff * cfg.dt >= 1.0)
    std::fprintf(stderr,
                 "lpvbat: warning: svf cutoff*dt = %g >= 1; the filter is "
                 "poorly resolved at this sampling rate\n",
                 cfg.cutoff * cfg.dt);
}

}  // namespace

std::vector<double> svf_filter(std::span<const double> signal,
                               const SvfConfig& cfg, int j) {
  check_config(cfg);
  if (j < 0 || j > cfg.order)
    fail(ErrorCode::InvalidOrder, "svf_filter: derivative order must be in [0, order]");

  const int n = cfg.order;
  const double nu = cfg.cutoff;
  const double dt = cfg.dt;
  const std::size_t m = signal.size();
  std::vector<double> out(m, 0.0);
  if (m == 0) return out;

  if (n == 1) {
    // x[k+1] = e^(-nu dt) x[k] + (1 - e^(-nu dt))/nu u[k];  F_0 = x,
    // F_1 = u - nu x. Exact for ZOH inputs.
    const double a = std::exp(-nu * dt);
    const double b = (1.0 - a) / nu;
    double x = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      out[k] = (j == 0) ? x : signal[k] - nu * x;
      x = a * x + b * signal[k];
    }
    return out;
  }

  // Chain x_1 = u/(s+nu), x_i = x_{i-1}/(s+nu). The system matrix is
  // -nu*I + N with N the subdiagonal shift, so the ZOH transition is
  //   Ad[i][l] = e^(-nu dt) dt^(i-l)/(i-l)!   (i >= l)
  //   Bd[i]    = integral_0^dt e^(-nu s) s^i / i! ds
  // and F_j[u] = sum_{i=0..j} C(j,i) (-nu)^i x_{n-j+i} with x_0 := u.
  std::vector<double> ad(n);  // e^(-nu dt) dt^k / k!
  {
    const double e = std::exp(-nu * dt);
    double term = e;
    for (int k = 0; k < n; ++k) {
      ad[k] = term;
      term *= dt / (k + 1);
    }
  }
  std::vector<double> bd(n);
  {
    double ik = (1.0 - std::exp(-nu * dt)) / nu;  // integral of e^(-nu s)
    double dt_pow = 1.0;                          // dt^k / k!
    bd[0] = ik;
    for (int k = 1; k < n; ++k) {
      dt_pow *= dt / k;
      ik = (ik - dt_pow * std::exp(-nu * dt)) / nu;
      bd[k] = ik;
    }
  }
  std::vector<double> coeff(j + 1);  // C(j,i) (-nu)^i
  {
    double binom = 1.0;
    double pw = 1.0;
    for (int i = 0; i <= j; ++i) {
      coeff[i] = binom * pw;
      binom = binom * (j - i) / (i + 1);
      pw *= -nu;
    }
  }

  std::vector<double> x(n, 0.0), xn(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double y = 0.0;
    for (int i = 0; i <= j; ++i) {
      const int idx = n - j + i;  // x_0 aliases the input
      y += coeff[i] * (idx == 0 ? signal[k] : x[idx - 1]);
    }
    out[k] = y;
    for (int i = 0; i < n; ++i) {
      double v = bd[i] * signal[k];
      for (int l = 0; l <= i; ++l) v += ad[i - l] * x[l];
      xn[i] = v;
    }
    x.swap(xn);
  }
  return out;
}

long svf_warmup_length(const SvfConfig& cfg) {
  check_config(cfg);
  const double ticks = 5.0 / (cfg.cutoff * cfg.dt);
  const double nearest = std::round(ticks);
  if (std::abs(ticks - nearest) < 1e-9 * std::max(1.0, nearest))
    return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(ticks));
}

}  // namespace lpvbat
