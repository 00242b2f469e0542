#pragma once

#include <span>

namespace lpvbat {

/// Denominator convention for the RMSE. `SamplesPlusOne` divides the summed
/// squared error by m+1 and is the library default; `Samples` is the
/// conventional m divisor, kept for cross-checks.
enum class RmseVariant { SamplesPlusOne, Samples };

/// Normalizer for the VAF. `VarEstimate` divides by the population variance
/// of yhat (library default); `VarReference` divides by the variance of y.
enum class VafVariant { VarEstimate, VarReference };

double rmse(std::span<const double> y, std::span<const double> yhat,
            RmseVariant variant = RmseVariant::SamplesPlusOne);

/// Variance-accounted-for in percent: (1 - var(y - yhat)/var(denom)) * 100
/// with population variances.
double vaf(std::span<const double> y, std::span<const double> yhat,
           VafVariant variant = VafVariant::VarEstimate);

}  // namespace lpvbat
