#include "ecm.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace lpvbat {

EcmTruth default_truth(double capacity_ah) {
  EcmTruth t;
  t.capacity_ah = capacity_ah;
  t.r0 = [](double z) {
    return 0.03 * std::cos(0.3 * z + 2.0) + 0.04 / (1.0 + 200.0 * std::pow(z, 1.8)) + 0.1;
  };
  t.r1 = [](double z) {
    return 0.3 * std::sin(0.1 * z + 2.0) + 0.6 / (1.0 + 200.0 * std::pow(z, 1.5)) - 0.1;
  };
  t.tau1 = [](double z) { return std::cos(2.0 * z + 1.0) + std::sin(5.0 * z + 1.0) + 18.0; };
  t.voc = [](double z) {
    return 0.03 * std::pow(1.5 - z, -4.0) + 0.1 * std::log(z + 0.01) + 3.0;
  };
  return t;
}

EcmTruth constant_truth(double r0, double r1, double tau1, double voc,
                        double capacity_ah) {
  EcmTruth t;
  t.capacity_ah = capacity_ah;
  t.r0 = [r0](double) { return r0; };
  t.r1 = [r1](double) { return r1; };
  t.tau1 = [tau1](double) { return tau1; };
  t.voc = [voc](double) { return voc; };
  return t;
}

double CurrentProfile::duration() const {
  double d = 0.0;
  for (const auto& [len, amps] : schedule) d += len;
  return d;
}

double CurrentProfile::current_at(double t) const {
  if (t < 0.0) return 0.0;
  double end = 0.0;
  for (const auto& [len, amps] : schedule) {
    end += len;
    if (t < end) return amps;
  }
  return 0.0;
}

void CurrentProfile::validate() const {
  if (schedule.empty())
    fail(ErrorCode::InvalidArgument, "profile schedule is empty");
  for (const auto& [len, amps] : schedule)
    if (!(len > 0.0))
      fail(ErrorCode::InvalidArgument, "profile segment duration must be > 0");
}

namespace {

// (duration s, current A) before scaling; one cycle sums to 360 s and
// drains 304 A*s net.
constexpr std::pair<double, double> kDstCycle[] = {
    {16, 0},  {28, -1}, {12, -2}, {8, 1},  {16, 0},  {24, -1}, {12, -2},
    {8, 1},   {16, 0},  {24, -1}, {12, -2}, {8, 2},  {32, -3}, {8, 2},
    {44, -1}, {12, -4}, {12, 2},  {4, -5},  {4, 5},  {40, -1}, {20, 0}};

}  // namespace

double dst_cycle_charge_as() {
  double q = 0.0;
  for (const auto& [len, amps] : kDstCycle) q += len * amps;
  return q;
}

double dst_cycle_duration_s() {
  double d = 0.0;
  for (const auto& [len, amps] : kDstCycle) d += len;
  return d;
}

CurrentProfile dst_profile(double duration_s, double amplitude_scale) {
  if (!(duration_s > 0.0))
    fail(ErrorCode::InvalidArgument, "dst_profile: duration must be > 0");
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::DstLike;
  p.base_step = 4.0;
  p.amplitude_scale = amplitude_scale;
  double remaining = duration_s;
  while (remaining > 0.0) {
    for (const auto& [len, amps] : kDstCycle) {
      const double use = std::min(len, remaining);
      p.schedule.emplace_back(use, amps * amplitude_scale);
      remaining -= use;
      if (remaining <= 0.0) break;
    }
  }
  return p;
}

CurrentProfile constant_profile(double duration_s, double amps) {
  if (!(duration_s > 0.0))
    fail(ErrorCode::InvalidArgument, "constant_profile: duration must be > 0");
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::Constant;
  p.base_step = duration_s;
  p.amplitude_scale = amps;
  p.schedule.emplace_back(duration_s, amps);
  return p;
}

CurrentProfile prbs_profile(double duration_s, double amplitude,
                            double base_step, std::uint64_t seed) {
  if (!(duration_s > 0.0))
    fail(ErrorCode::InvalidArgument, "prbs_profile: duration must be > 0");
  if (!(base_step > 0.0))
    fail(ErrorCode::InvalidArgument, "prbs_profile: base_step must be > 0");
  CurrentProfile p;
  p.kind = CurrentProfile::Kind::Prbs;
  p.base_step = base_step;
  p.amplitude_scale = amplitude;
  std::mt19937_64 rng(seed);
  double remaining = duration_s;
  while (remaining > 0.0) {
    const double use = std::min(base_step, remaining);
    const double sign = (rng() & 1u) ? 1.0 : -1.0;
    p.schedule.emplace_back(use, sign * amplitude);
    remaining -= use;
  }
  return p;
}

CurrentProfile generate_profile(CurrentProfile::Kind kind, double duration_s,
                                double amplitude_scale, std::uint64_t seed,
                                double base_step) {
  switch (kind) {
    case CurrentProfile::Kind::DstLike:
      return dst_profile(duration_s, amplitude_scale);
    case CurrentProfile::Kind::Constant:
      return constant_profile(duration_s, amplitude_scale);
    case CurrentProfile::Kind::Prbs:
      return prbs_profile(duration_s, amplitude_scale, base_step, seed);
  }
  fail(ErrorCode::InvalidArgument, "generate_profile: unknown profile kind");
}

SampledDataset simulate(const EcmTruth& truth, const CurrentProfile& profile,
                        const SimulateOptions& options) {
  profile.validate();
  if (!(options.dt > 0.0)) fail(ErrorCode::InvalidArgument, "simulate: dt must be > 0");
  if (!(options.z0 >= 0.0 && options.z0 <= 1.0))
    fail(ErrorCode::InvalidArgument, "simulate: z0 must be in [0, 1]");
  if (options.noise_std < 0.0)
    fail(ErrorCode::InvalidArgument, "simulate: noise_std must be >= 0");
  if (!(truth.capacity_ah > 0.0))
    fail(ErrorCode::InvalidArgument, "simulate: capacity must be > 0");

  const double dt = options.dt;
  const double horizon = profile.duration();
  const double soc_gain = dt / (3600.0 * truth.capacity_ah);

  SampledDataset ds;
  ds.dt = dt;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double z = options.z0;
  double v1 = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double t = k * dt;
    if (t > horizon - 0.5 * dt) break;  // profile covers [0, horizon)
    const double i = profile.current_at(t);
    const double tau = truth.tau1(z);
    if (!(tau > 0.0)) {
      std::ostringstream msg;
      msg << "simulate: tau1(" << z << ") = " << tau << " is not positive";
      fail(ErrorCode::NonpositiveTimeConstant, msg.str());
    }
    const double v = v1 + truth.r0(z) * i + truth.voc(z);

    ds.t.push_back(t);
    ds.z_true.push_back(z);
    if (options.noise_std > 0.0) {
      ds.i_b.push_back(i + options.noise_std * gauss(rng));
      ds.v_b.push_back(v + options.noise_std * gauss(rng));
    } else {
      ds.i_b.push_back(i);
      ds.v_b.push_back(v);
    }

    // Exact ZOH advance with parameters frozen at z(t_k).
    const double a = std::exp(-dt / tau);
    v1 = a * v1 + truth.r1(z) * (1.0 - a) * i;
    const double z_next = z + soc_gain * i;
    if (z_next < options.z_floor) break;
    z = std::min(z_next, 1.0);
  }
  return ds;
}

}  // namespace lpvbat
