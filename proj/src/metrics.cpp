#include "metrics.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace lpvbat {

namespace {

double population_variance(std::span<const double> x) {
  const std::size_t m = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(m);
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(m);
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat,
            RmseVariant variant) {
  if (y.size() != yhat.size())
    fail(ErrorCode::LengthMismatch, "rmse: series lengths differ");
  if (y.empty()) fail(ErrorCode::LengthMismatch, "rmse: empty series");
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double e = y[k] - yhat[k];
    acc += e * e;
  }
  const double denom = variant == RmseVariant::SamplesPlusOne
                           ? static_cast<double>(y.size() + 1)
                           : static_cast<double>(y.size());
  return std::sqrt(acc / denom);
}

double vaf(std::span<const double> y, std::span<const double> yhat,
           VafVariant variant) {
  if (y.size() != yhat.size())
    fail(ErrorCode::LengthMismatch, "vaf: series lengths differ");
  if (y.empty()) fail(ErrorCode::LengthMismatch, "vaf: empty series");
  std::vector<double> resid(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) resid[k] = y[k] - yhat[k];
  const double denom = variant == VafVariant::VarEstimate
                           ? population_variance(yhat)
                           : population_variance(y);
  if (!(denom > 1e-30))
    fail(ErrorCode::DegenerateVariance, "vaf: normalizing variance is ~0");
  return (1.0 - population_variance(resid) / denom) * 100.0;
}

}  // namespace lpvbat
