#include "anonsched/stats.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace anonsched {

bool Estimate::within(double target, double k) const noexcept {
  return std::abs(value - target) <= k * std_error;
}

Estimate ratio_of_batches(std::span<const double> numerators, std::span<const double> denominators) {
  if (numerators.size() != denominators.size() || numerators.empty()) {
    throw std::invalid_argument("ratio_of_batches: batch vectors must be nonempty and equal length");
  }
  const double num = std::accumulate(numerators.begin(), numerators.end(), 0.0);
  const double den = std::accumulate(denominators.begin(), denominators.end(), 0.0);
  if (den <= 0.0) throw std::domain_error("ratio_of_batches: zero denominator");
  const double ratio = num / den;
  const auto k = static_cast<double>(numerators.size());
  if (numerators.size() < 2) return {ratio, 0.0};
  double ss = 0.0;
  for (std::size_t b = 0; b < numerators.size(); ++b) {
    const double r = numerators[b] - ratio * denominators[b];
    ss += r * r;
  }
  const double mean_den = den / k;
  return {ratio, std::sqrt(ss / (k * (k - 1.0))) / mean_den};
}

Estimate mean_of_batches(std::span<const double> batch_means) {
  if (batch_means.empty()) throw std::invalid_argument("mean_of_batches: no batches");
  const auto k = static_cast<double>(batch_means.size());
  const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / k;
  if (batch_means.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double m : batch_means) ss += (m - mean) * (m - mean);
  return {mean, std::sqrt(ss / (k - 1.0) / k)};
}

}  // namespace anonsched
