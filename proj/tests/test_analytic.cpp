#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "anonsched/analytic.hpp"

using namespace anonsched;

TEST_CASE("loss fraction examples") {
  CHECK(loss_fraction(1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(loss_fraction(1.0, 2.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(loss_fraction(3.0, 2.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(loss_fraction(2.0, 2.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // Slow relay: loss tends to 1 - C_B / C_S.
  CHECK(loss_fraction(2.0, 1.0, 1000.0) == doctest::Approx(0.5).epsilon(1e-12));
  SUBCASE("exponential convergence to zero") {
    double prev = 1.0;
    for (double delta : {5.0, 10.0, 20.0, 40.0}) {
      const double f = loss_fraction(1.0, 2.0, delta);
      CHECK(f < prev);
      CHECK(f <= 2.0 * std::exp(-delta));
      prev = f;
    }
  }
  CHECK_THROWS(loss_fraction(0.0, 1.0, 1.0));
  CHECK_THROWS(loss_fraction(1.0, 1.0, -1.0));
}

TEST_CASE("loss fraction is continuous across equal rates") {
  for (double cb : {0.5, 1.0, 2.0, 7.0}) {
    for (double delta : {0.1, 1.0, 10.0}) {
      const double at = loss_fraction(cb, cb, delta);
      for (double rel : {1e-6, -1e-6}) {
        CHECK(std::abs(loss_fraction(cb * (1.0 + rel), cb, delta) - at) < 1e-5 * std::max(1.0, cb * delta));
        CHECK(std::abs(loss_fraction(cb, cb * (1.0 + rel), delta) - at) < 1e-5 * std::max(1.0, cb * delta));
      }
      // The general branch just outside the switch must agree with the limit closely.
      CHECK(std::abs(loss_fraction(cb * (1.0 + 2e-9), cb, delta) - at) < 1e-8);
    }
  }
}

TEST_CASE("loss fraction monotonicity grid") {
  const std::vector<double> rates{0.25, 0.5, 1.0, 1.5, 2.0, 4.0};
  const std::vector<double> deltas{0.05, 0.2, 1.0, 3.0, 8.0};
  for (double cs : rates) {
    for (double cb : rates) {
      for (std::size_t k = 1; k < deltas.size(); ++k) {
        CHECK(loss_fraction(cs, cb, deltas[k]) < loss_fraction(cs, cb, deltas[k - 1]));
      }
    }
  }
  for (double delta : deltas) {
    for (std::size_t i = 1; i < rates.size(); ++i) {
      for (double other : rates) {
        CHECK(loss_fraction(rates[i], other, delta) > loss_fraction(rates[i - 1], other, delta));
        CHECK(loss_fraction(other, rates[i], delta) < loss_fraction(other, rates[i - 1], delta));
      }
    }
  }
}

TEST_CASE("loss fraction slope matches finite differences") {
  for (double cs : {0.3, 1.0, 1.9, 2.0, 2.1, 5.0}) {
    for (double cb : {0.5, 2.0}) {
      for (double delta : {0.1, 1.0, 6.0}) {
        const double h = 1e-5 * cs;
        const double fd = (loss_fraction(cs + h, cb, delta) - loss_fraction(cs - h, cb, delta)) / (2 * h);
        CHECK(loss_fraction_slope(cs, cb, delta) == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("equal-priority rates") {
  const std::vector<double> one{1.5};
  CHECK(equal_priority_rates(one, 2.0, 1.0)[0] == doctest::Approx(1.5 * (1.0 - loss_fraction(1.5, 2.0, 1.0))));
  const std::vector<double> two{1.0, 1.0};
  const auto r = equal_priority_rates(two, 2.0, 1.0);
  CHECK(r[0] == doctest::Approx(2.0 / 3.0));
  CHECK(r[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("two-source region") {
  const std::vector<double> caps{0.5, 1.0, 2.0};
  for (double c1 : caps) {
    for (double c2 : caps) {
      for (double cb : caps) {
        for (double delta : {0.1, 1.0, 10.0}) {
          const auto r = two_source_region(c1, c2, cb, delta);
          CAPTURE(c1);
          CAPTURE(c2);
          CAPTURE(cb);
          CAPTURE(delta);
          REQUIRE(r.inner.size() >= 3);
          for (const auto& v : r.inner) CHECK(r.outer_contains(v, 1e-12));
          CHECK(r.inner_contains(r.max_sum_point, 1e-9));
          CHECK(r.inner_contains({r.individual_cap[0], 0.0}, 1e-9));
          CHECK(r.inner_contains({0.0, r.individual_cap[1]}, 1e-9));
          CHECK(r.inner_contains({0.0, 0.0}, 1e-12));
          CHECK(r.slope[0] <= -1.0 + 1e-12);
          CHECK(r.slope[1] <= -1.0 + 1e-12);
          CHECK(r.max_sum_point[0] + r.max_sum_point[1] == doctest::Approx(r.sum_cap));
        }
      }
    }
  }
  SUBCASE("bounds coincide for long windows") {
    const auto r = two_source_region(1.0, 2.0, 2.0, 25.0);
    const auto v = r.inner_max_sum_vertex();
    CHECK(std::abs(v[0] + v[1] - r.sum_cap) < 1e-6);
  }
  SUBCASE("csv") {
    std::ostringstream out;
    write_region_csv(out, two_source_region(1.0, 1.0, 2.0, 1.0));
    CHECK(out.str().rfind("polygon,vertex,lambda1,lambda2\ninner,0,0,0\n", 0) == 0);
  }
}

TEST_CASE("convex hull") {
  const std::vector<RatePoint> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0.0}};
  const auto h = convex_hull(pts);
  CHECK(h == std::vector<RatePoint>{{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

TEST_CASE("mean delay") {
  CHECK(mean_delay(INFINITY, 1.0, 3.0) == doctest::Approx(0.5));
  CHECK(mean_delay(1e4, 1.0, 3.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mean_delay(2.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(mean_delay(2.0, 1.0, 1.0 + 1e-7) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mean_delay(2.0, 3.0, 1.0) < 2.0);
  CHECK(mean_delay(200.0, 3.0, 1.0) == doctest::Approx(200.0 - 1.0 / 2.0).epsilon(1e-9));
  SUBCASE("increasing in the strict bound") {
    for (double cs : {0.5, 1.0, 2.0}) {
      double prev = 0.0;
      for (double d = 0.01; d < 50.0; d *= 1.3) {
        const double m = mean_delay(d, cs, 1.0);
        CHECK(m > prev);
        CHECK(m < d);
        prev = m;
      }
    }
  }
  CHECK_THROWS(mean_delay(0.0, 1.0, 1.0));
}

TEST_CASE("strict bound for a mean target") {
  CHECK(std::isinf(strict_delay_for_mean(1.0, 1.0, 3.0)));
  for (double target : {1e-4, 1e-3, 0.005}) {
    const double d = strict_delay_for_mean(target, 1.0, 1.0);
    CHECK(std::abs(d / (2.0 * target) - 1.0) < 0.05);
  }
  for (double cs : {0.5, 1.0, 2.0}) {
    for (double cb : {0.5, 1.0, 1.2}) {
      for (double target : {0.05, 0.5, 3.0}) {
        const double d = strict_delay_for_mean(target, cs, cb);
        if (std::isinf(d)) {
          CHECK(cb - cs >= 1.0 / target);
        } else {
          CHECK(std::abs(mean_delay(d, cs, cb) - target) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("relay rate is concave in the mean delay") {
  // Segmenting the window cannot beat a single strict bound.
  for (double cs : {0.5, 1.0, 2.0}) {
    const double cb = 1.0;
    std::vector<double> m, lambda;
    for (double d = 0.05; d < 20.0; d *= 1.25) {
      m.push_back(mean_delay(d, cs, cb));
      lambda.push_back(cs * (1.0 - loss_fraction(cs, cb, d)));
    }
    for (std::size_t k = 1; k + 1 < m.size(); ++k) {
      const double s1 = (lambda[k] - lambda[k - 1]) / (m[k] - m[k - 1]);
      const double s2 = (lambda[k + 1] - lambda[k]) / (m[k + 1] - m[k]);
      CHECK(s2 <= s1 + 1e-12);
    }
  }
}

TEST_CASE("erasure capacity") {
  CHECK(erasure_capacity(1.0, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(erasure_capacity(1.0, 2.0, 60.0) == doctest::Approx(1.0));
}
