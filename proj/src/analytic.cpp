#include "anonsched/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "anonsched/format.hpp"

namespace anonsched {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_rates(double source_rate, double relay_rate, double delta) {
  if (!(source_rate > 0.0) || !(relay_rate > 0.0)) throw std::invalid_argument("rates must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("delay bound must be >= 0");
}

bool equal_rates(double a, double b) { return std::abs(a - b) / b < kEqualRateThreshold; }

// (1 + e^x (x - 1)) / x^2, stable for all x (-> 1/2 at 0).
double delay_kernel(double x) {
  if (std::abs(x) < 0.05) {
    // sum_{k>=2} (k-1) x^(k-2) / k!
    double term = 1.0, sum = 0.0, fact = 2.0;
    for (int k = 2; k < 14; ++k) {
      sum += (k - 1) * term / fact;
      term *= x;
      fact *= (k + 1);
    }
    return sum;
  }
  if (x > 700.0) return std::numeric_limits<double>::infinity();
  return (1.0 + std::exp(x) * (x - 1.0)) / (x * x);
}

// expm1(x) / x, -> 1 at 0.
double expm1_over_x(double x) { return x == 0.0 ? 1.0 : std::expm1(x) / x; }

double cross(const RatePoint& o, const RatePoint& a, const RatePoint& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Value of the other coordinate where the line through `m` with
// d(other)/d(axis) = slope meets axis = at.
double along(const RatePoint& m, int axis, double slope, double at) {
  return m[1 - axis] + slope * (at - m[axis]);
}

// Vertices of {0 <= l_axis <= cap, the line through m with the given slope bounds l_other}
// on the side of m where l_axis grows, ending on the l_other = 0 axis.
void tangent_side(const RatePoint& m, int axis, double slope, double cap, std::vector<RatePoint>& out) {
  auto point = [axis](double a, double b) {
    RatePoint p{};
    p[axis] = a;
    p[1 - axis] = b;
    return p;
  };
  if (std::isinf(slope)) {
    out.push_back(point(m[axis], 0.0));
    return;
  }
  const double at_cap = along(m, axis, slope, cap);
  if (at_cap >= 0.0) {
    out.push_back(point(cap, at_cap));
    out.push_back(point(cap, 0.0));
  } else {
    out.push_back(point(m[axis] - m[1 - axis] / slope, 0.0));
  }
}

bool polygon_contains(const std::vector<RatePoint>& poly, const RatePoint& p, double tol) {
  if (poly.size() < 3) {
    for (const auto& v : poly) {
      if (std::abs(v[0] - p[0]) <= tol && std::abs(v[1] - p[1]) <= tol) return true;
    }
    return false;
  }
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (cross(a, b, p) < -tol * std::max(len, 1e-300)) return false;
  }
  return true;
}

}  // namespace

double loss_fraction(double source_rate, double relay_rate, double delta) {
  require_rates(source_rate, relay_rate, delta);
  if (equal_rates(source_rate, relay_rate)) return 1.0 / (1.0 + source_rate * delta);
  // (C_B - C_S) / (C_B e^{x} - C_S) with x = delta (C_B - C_S), written so that
  // the near-equal case does not cancel.
  const double gap = relay_rate - source_rate;
  const double x = delta * gap;
  if (x > 700.0) return 0.0;
  const double denom = gap + relay_rate * std::expm1(x);
  return gap / denom;
}

double loss_fraction_slope(double source_rate, double relay_rate, double delta) {
  require_rates(source_rate, relay_rate, delta);
  if (delta == 0.0) return 0.0;
  const double x = delta * (relay_rate - source_rate);
  if (x > 700.0) return 0.0;
  if (x > 30.0) {
    // Asymptote (x - 1) e^{-x} / C_B, relative error O(x e^{-x}).
    return (x - 1.0) * std::exp(-x) / relay_rate;
  }
  // f' = C_B (1 + e^x (x - 1)) / Q^2 with Q = x (1/delta + C_B expm1(x)/x).
  const double q = 1.0 / delta + relay_rate * expm1_over_x(x);
  return relay_rate * delay_kernel(x) / (q * q);
}

std::vector<double> equal_priority_rates(std::span<const double> source_rates, double relay_rate, double delta) {
  const double total = std::accumulate(source_rates.begin(), source_rates.end(), 0.0);
  std::vector<double> out;
  out.reserve(source_rates.size());
  if (total <= 0.0) {
    out.assign(source_rates.size(), 0.0);
    return out;
  }
  const double keep = 1.0 - loss_fraction(total, relay_rate, delta);
  for (double t : source_rates) out.push_back(t * keep);
  return out;
}

RateRegion2 two_source_region(double source_rate_1, double source_rate_2, double relay_rate, double delta) {
  require_rates(source_rate_1, relay_rate, delta);
  require_rates(source_rate_2, relay_rate, delta);
  RateRegion2 r;
  r.source_rate[0] = source_rate_1;
  r.source_rate[1] = source_rate_2;
  r.relay_rate = relay_rate;
  r.delta = delta;
  const double c[2] = {source_rate_1, source_rate_2};
  const double sum = c[0] + c[1];
  for (int i = 0; i < 2; ++i) r.individual_cap[i] = c[i] * (1.0 - loss_fraction(c[i], relay_rate, delta));
  const double keep = 1.0 - loss_fraction(sum, relay_rate, delta);
  r.sum_cap = sum * keep;
  r.max_sum_point = {c[0] * keep, c[1] * keep};

  // Boundary of the equal-priority region through the max-sum point: hold
  // source j at C_j and vary T_i. Direction (d lambda_i, d lambda_j) / dT_i =
  // (g + C_i g', C_j g') with g = 1 - f_e(T_i + C_j), g' = -f_e'.
  const double dkeep = -loss_fraction_slope(sum, relay_rate, delta);
  for (int i = 0; i < 2; ++i) {
    const int j = 1 - i;
    const double di = keep + c[i] * dkeep;
    const double dj = c[j] * dkeep;
    if (dj == 0.0) {
      r.slope[i] = -kInf;
      r.intercept[i] = kInf;
    } else {
      r.slope[i] = di / dj;
      r.intercept[i] = r.max_sum_point[i] - r.slope[i] * r.max_sum_point[j];
    }
  }
  // Line i bounds the side of M where lambda_j grows (source i slowed down).
  std::vector<RatePoint> inner = {{0.0, 0.0}, r.max_sum_point};
  tangent_side(r.max_sum_point, 0, r.slope[1], r.individual_cap[0], inner);
  tangent_side(r.max_sum_point, 1, r.slope[0], r.individual_cap[1], inner);
  r.inner = convex_hull(std::move(inner));

  const double x_top = std::clamp(r.sum_cap - r.individual_cap[1], 0.0, r.individual_cap[0]);
  const double y_right = std::clamp(r.sum_cap - r.individual_cap[0], 0.0, r.individual_cap[1]);
  r.outer = convex_hull({{0.0, 0.0},
                         {r.individual_cap[0], 0.0},
                         {r.individual_cap[0], y_right},
                         {x_top, r.individual_cap[1]},
                         {0.0, r.individual_cap[1]}});
  return r;
}

bool RateRegion2::outer_contains(const RatePoint& p, double tol) const {
  return p[0] >= -tol && p[1] >= -tol && p[0] <= individual_cap[0] + tol && p[1] <= individual_cap[1] + tol &&
         p[0] + p[1] <= sum_cap + tol;
}

bool RateRegion2::inner_contains(const RatePoint& p, double tol) const { return polygon_contains(inner, p, tol); }

RatePoint RateRegion2::inner_max_sum_vertex() const {
  if (inner.empty()) return {0.0, 0.0};
  return *std::max_element(inner.begin(), inner.end(),
                           [](const RatePoint& a, const RatePoint& b) { return a[0] + a[1] < b[0] + b[1]; });
}

void write_region_csv(std::ostream& out, const RateRegion2& region) {
  out << "polygon,vertex,lambda1,lambda2\n";
  auto emit = [&](const char* name, const std::vector<RatePoint>& poly) {
    for (std::size_t k = 0; k < poly.size(); ++k) {
      out << name << ',' << k << ',' << format_double(poly[k][0]) << ',' << format_double(poly[k][1]) << '\n';
    }
  };
  emit("inner", region.inner);
  emit("outer", region.outer);
}

std::vector<RatePoint> convex_hull(std::vector<RatePoint> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end(),
                           [](const RatePoint& a, const RatePoint& b) {
                             return std::abs(a[0] - b[0]) <= 1e-13 * std::max(1.0, std::abs(a[0])) &&
                                    std::abs(a[1] - b[1]) <= 1e-13 * std::max(1.0, std::abs(a[1]));
                           }),
               points.end());
  if (points.size() < 3) return points;
  std::vector<RatePoint> hull(2 * points.size());
  std::size_t k = 0;
  auto tol = [](const RatePoint& o, const RatePoint& a, const RatePoint& b) {
    const double scale = std::max({1.0, std::abs(a[0] - o[0]), std::abs(b[1] - o[1])});
    return 1e-14 * scale * scale;
  };
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= tol(hull[k - 2], hull[k - 1], p)) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = points[i];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= tol(hull[k - 2], hull[k - 1], p)) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  // Start at the vertex closest to the origin (lowest x + y, then lowest x).
  auto start = std::min_element(hull.begin(), hull.end(), [](const RatePoint& a, const RatePoint& b) {
    return std::make_pair(a[0] + a[1], a[0]) < std::make_pair(b[0] + b[1], b[0]);
  });
  std::rotate(hull.begin(), start, hull.end());
  return hull;
}

double mean_delay(double delta_star, double source_rate, double relay_rate) {
  if (!(delta_star > 0.0)) throw std::invalid_argument("mean_delay: strict bound must be > 0");
  if (!(source_rate > 0.0) || !(relay_rate > 0.0)) throw std::invalid_argument("mean_delay: rates must be positive");
  if (std::isinf(delta_star)) {
    return relay_rate > source_rate ? 1.0 / (relay_rate - source_rate) : kInf;
  }
  if (equal_rates(source_rate, relay_rate)) return delta_star / 2.0;
  // y = delta* (C_S - C_B); m = delta* N(y) / (y expm1(y)), N(y) = 1 + e^y (y - 1).
  const double y = delta_star * (source_rate - relay_rate);
  if (y > 30.0) {
    // Divide through by e^y: m = (e^{-y} + y - 1) / ((C_B - C_S)(e^{-y} - 1)).
    const double ey = std::exp(-y);
    return (ey + y - 1.0) / ((relay_rate - source_rate) * (ey - 1.0));
  }
  if (y < -700.0) return 1.0 / (relay_rate - source_rate);
  return delta_star * delay_kernel(y) * y / std::expm1(y);
}

double strict_delay_for_mean(double mean_bound, double source_rate, double relay_rate) {
  if (!(mean_bound > 0.0)) throw std::invalid_argument("strict_delay_for_mean: mean bound must be > 0");
  if (!(source_rate > 0.0) || !(relay_rate > 0.0)) {
    throw std::invalid_argument("strict_delay_for_mean: rates must be positive");
  }
  if (std::isinf(mean_bound) || relay_rate - source_rate >= 1.0 / mean_bound) return kInf;
  // m(x) < x, so the root is above mean_bound; m is increasing.
  double lo = mean_bound;
  double hi = 2.0 * mean_bound;
  while (mean_delay(hi, source_rate, relay_rate) <= mean_bound) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return kInf;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_delay(mid, source_rate, relay_rate) <= mean_bound) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double erasure_capacity(double source_rate, double relay_rate, double delta) {
  return 1.0 - loss_fraction(source_rate, relay_rate, delta);
}

}  // namespace anonsched
