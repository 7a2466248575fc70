#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "anonsched/anonymity.hpp"
#include "anonsched/rate_distortion.hpp"
#include "oracles/toy_instances.hpp"

using namespace anonsched;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DistortionProblem hamming(std::size_t n) {
  DistortionProblem p;
  p.prior.assign(n, 1.0 / static_cast<double>(n));
  p.distortion.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t k = 0; k < n; ++k) p.distortion[k][k] = 0.0;
  return p;
}

}  // namespace

TEST_CASE("hamming distortion-rate has a closed form") {
  // Uniform binary source: D(r) = h^-1(1 - r).
  const auto p = hamming(2);
  for (double d : {0.05, 0.11, 0.2, 0.35}) {
    const double r = 1.0 + d * std::log2(d) + (1.0 - d) * std::log2(1.0 - d);
    const auto sol = distortion_rate(p, r);
    CHECK(sol.distortion == doctest::Approx(d).epsilon(1e-7));
    CHECK(sol.rate_bits <= r + 1e-9);
  }
}

TEST_CASE("distortion-rate matches the independent oracle") {
  for (const auto& inst : oracle::toy_distortion_instances()) {
    const DistortionProblem p{inst.prior, inst.distortion};
    for (std::size_t k = 0; k < inst.rates_bits.size(); ++k) {
      const auto sol = distortion_rate(p, inst.rates_bits[k]);
      CHECK(sol.distortion == doctest::Approx(inst.expected_distortion[k]).epsilon(1e-4));
      CHECK(sol.rate_bits <= inst.rates_bits[k] + 1e-9);
    }
  }
}

TEST_CASE("distortion-rate endpoints") {
  DistortionProblem p{{0.5, 0.25, 0.25}, {{0.0, 2.0, kInf}, {1.0, 0.0, 3.0}, {kInf, 1.0, 0.0}}};
  const auto zero = distortion_rate(p, 0.0);
  CHECK(zero.distortion == doctest::Approx(0.5 * 2.0 + 0.25 * 0.0 + 0.25 * 1.0));
  CHECK(zero.rate_bits == 0.0);
  const auto full = distortion_rate(p, 1.5);
  CHECK(full.distortion < 1e-3);
  CHECK(full.rate_bits <= 1.5 + 1e-12);

  DistortionProblem disjoint{{0.5, 0.5}, {{0.0, kInf}, {kInf, 0.0}}};
  CHECK_THROWS_AS(distortion_rate(disjoint, 0.0), std::domain_error);
  CHECK(distortion_rate(disjoint, 1.0).distortion == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(distortion_rate(p, -0.1), std::invalid_argument);
}

TEST_CASE("distortion-rate is nonincreasing and convex") {
  for (const auto& inst : oracle::toy_distortion_instances()) {
    const DistortionProblem p{inst.prior, inst.distortion};
    const double h = entropy_bits(inst.prior);
    std::vector<double> d;
    for (int k = 0; k <= 10; ++k) d.push_back(distortion_rate(p, h * k / 10.0).distortion);
    for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k] <= d[k - 1] + 1e-9);
    for (std::size_t k = 1; k + 1 < d.size(); ++k) CHECK(d[k] <= 0.5 * (d[k - 1] + d[k + 1]) + 1e-7);
  }
}

TEST_CASE("blahut-arimoto iteration limit reports the best iterate") {
  BaOptions o;
  o.max_iter = 2;
  o.gap_tol = 0.0;
  try {
    auto p = hamming(3);
    p.prior = {0.5, 0.3, 0.2};
    blahut_arimoto_slope(p, 2.0, o);
    FAIL("expected BlahutArimotoError");
  } catch (const BlahutArimotoError& e) {
    CHECK(e.best.conditional.size() == 3);
    CHECK(e.gap >= 0.0);
  }
}

TEST_CASE("mutual information examples") {
  const std::vector<double> prior{0.5, 0.5};
  CHECK(mutual_information_bits(prior, {{1.0, 0.0}, {0.0, 1.0}}) == doctest::Approx(1.0));
  CHECK(mutual_information_bits(prior, {{0.5, 0.5}, {0.5, 0.5}}) == doctest::Approx(0.0));
}

TEST_CASE("tradeoff curve on the switching network dominates deterministic choices") {
  const auto net = switching_network();
  CovertRateOptions o;
  o.mode = EpsilonMode::Analytic;
  CovertRateTable table(net.topology, net.prior, o);
  const auto matrix = distortion_matrix(table);
  const auto hull = convex_hull_deterministic(enumerate_deterministic(table));
  std::vector<double> alphas;
  for (int k = 0; k <= 10; ++k) alphas.push_back(k / 10.0);
  const auto curve = tradeoff_curve(net.prior, matrix, table.expected_visible(), alphas);
  REQUIRE(curve.points.size() == alphas.size());
  CHECK(curve.points.front().rate == doctest::Approx(4.0).epsilon(1e-9));
  for (const auto& pt : curve.points) {
    CHECK(pt.rate >= hull.evaluate(pt.alpha) - 1e-9);
    CHECK(anonymity_of(net.prior, pt.policy) >= pt.alpha - 1e-6);
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    CHECK(curve.points[k].rate <= curve.points[k - 1].rate + 1e-9);
  }
}
