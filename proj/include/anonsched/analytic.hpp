#pragma once

// Closed forms for independent Poisson schedules through a delay-bounded
// relay: loss fraction, equal-priority and two-source rate regions, the
// BGM mean delay and its inverse, and the erasure capacity.
//
// Rates are packets/second, delays seconds. Near-equal rate pairs switch to
// the analytic limit when |C_S - C_B| / C_B < kEqualRateThreshold.

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace anonsched {

inline constexpr double kEqualRateThreshold = 1e-9;

/// Fraction of arrivals BGM drops when a Poisson(source_rate) stream meets
/// Poisson(relay_rate) departures under strict delay bound `delta`.
double loss_fraction(double source_rate, double relay_rate, double delta);

/// d loss_fraction / d source_rate.
double loss_fraction_slope(double source_rate, double relay_rate, double delta);

/// Per-source relay rates when the relay ignores stream origin and runs BGM
/// on the merged stream: T_i * (1 - f_e(sum T, C_B)).
std::vector<double> equal_priority_rates(std::span<const double> source_rates, double relay_rate, double delta);

using RatePoint = std::array<double, 2>;

/// Achievable (inner) and unachievable (outer) bounds for a 2x1 relay.
struct RateRegion2 {
  double source_rate[2] = {0.0, 0.0};
  double relay_rate = 0.0;
  double delta = 0.0;

  /// Single-stream caps C_i (1 - f_e(C_i, C_B)).
  double individual_cap[2] = {0.0, 0.0};
  /// (C_1 + C_2)(1 - f_e(C_1 + C_2, C_B)).
  double sum_cap = 0.0;
  /// Equal-priority operating point with both sources at full rate.
  RatePoint max_sum_point{};
  /// Tangent lines through max_sum_point: lambda_i <= slope[i] lambda_j + intercept[i].
  /// Infinite slope means the line is lambda_j <= max_sum_point[j].
  double slope[2] = {0.0, 0.0};
  double intercept[2] = {0.0, 0.0};

  /// Convex inner polygon, counter-clockwise from the origin.
  std::vector<RatePoint> inner;
  /// Outer polygon (caps and sum cap), counter-clockwise from the origin.
  std::vector<RatePoint> outer;

  bool outer_contains(const RatePoint& p, double tol = 1e-12) const;
  bool inner_contains(const RatePoint& p, double tol = 1e-12) const;
  /// The inner vertex with the largest lambda_1 + lambda_2.
  RatePoint inner_max_sum_vertex() const;
};

RateRegion2 two_source_region(double source_rate_1, double source_rate_2, double relay_rate, double delta);

/// CSV rows `polygon,vertex,lambda1,lambda2` for the inner and outer polygons.
void write_region_csv(std::ostream& out, const RateRegion2& region);

/// Convex hull of points (counter-clockwise, collinear points dropped).
std::vector<RatePoint> convex_hull(std::vector<RatePoint> points);

/// Mean delay of packets relayed by BGM with strict bound `delta_star`.
double mean_delay(double delta_star, double source_rate, double relay_rate);

/// Strict bound whose BGM mean delay equals `mean_bound`, or +inf when
/// C_B - C_S >= 1 / mean_bound (pure FIFO already meets it).
double strict_delay_for_mean(double mean_bound, double source_rate, double relay_rate);

/// Erasure-channel capacity (packets per packet) seen through a BGM relay.
double erasure_capacity(double source_rate, double relay_rate, double delta);

}  // namespace anonsched
