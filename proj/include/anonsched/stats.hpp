#pragma once

#include <cstddef>
#include <span>

namespace anonsched {

/// A Monte-Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;

  /// |value - target| <= k * std_error. A zero error only accepts exact agreement.
  bool within(double target, double k = 3.0) const noexcept;
};

/// Ratio estimator sum(num)/sum(den) with a batch-means standard error.
/// Each index is one batch; batches should be long compared to the
/// correlation time of the underlying process.
Estimate ratio_of_batches(std::span<const double> numerators, std::span<const double> denominators);

/// Mean of per-batch means, with the usual sd/sqrt(k) error.
Estimate mean_of_batches(std::span<const double> batch_means);

}  // namespace anonsched
