#include <doctest.h>

#include <cmath>
#include <vector>

#include "anonsched/analytic.hpp"
#include "anonsched/anonymity.hpp"

using namespace anonsched;

namespace {

CovertRateOptions analytic_options() {
  CovertRateOptions o;
  o.mode = EpsilonMode::Analytic;
  o.simulation.delta = 1.0;
  return o;
}

SessionPrior two_session_prior() {
  SessionPrior p;
  p.sessions.push_back(Session("a", {{"S1", "M1", "A", "D"}, {"S2", "M1", "B", "D"}}));
  p.sessions.push_back(Session("b", {{"S1", "M1", "B", "D"}, {"S2", "M1", "A", "D"}}));
  p.probabilities = {0.5, 0.5};
  return p;
}

}  // namespace

TEST_CASE("entropy examples") {
  const auto net = switching_network();
  CHECK(entropy_bits(net.prior) == doctest::Approx(std::log2(24.0)).epsilon(1e-14));
  const std::vector<double> one{1.0};
  CHECK(entropy_bits(one) == 0.0);
  const std::vector<double> coin{0.5, 0.5};
  CHECK(entropy_bits(coin) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(entropy_nats(coin) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> with_zero{0.0, 0.25, 0.75};
  CHECK(entropy_bits(with_zero) == doctest::Approx(0.8112781244591328).epsilon(1e-14));
}

TEST_CASE("anonymity of the switching network covert sets") {
  const auto net = switching_network();
  const double h = std::log2(24.0);
  CHECK(std::abs(anonymity_of(net.prior, CovertSet{}) - 2.0 / h) < 1e-12);
  const double mixed = (std::log2(4.0) / 3.0 + 2.0 * std::log2(16.0) / 3.0) / h;
  CHECK(std::abs(anonymity_of(net.prior, CovertSet{"M1", "M3"}) - mixed) < 1e-12);
  CHECK(std::abs(anonymity_of(net.prior, CovertSet{"M2", "M4"}) - 1.0) < 1e-12);
  CHECK(std::abs(anonymity_of(net.prior, CovertSet{"M1", "M2", "M3", "M4"}) - 1.0) < 1e-12);

  for (const auto& covert : {CovertSet{}, CovertSet{"M1"}, CovertSet{"M1", "M3"}, CovertSet{"M2", "M4"}}) {
    const auto policy = CovertPolicy::deterministic(covert, net.prior.sessions.size());
    CHECK(std::abs(anonymity_of(net.prior, policy) - anonymity_of_nats(net.prior, policy)) < 1e-12);
  }
}

TEST_CASE("anonymity of a mixed policy") {
  // The sessions differ only in how M1 pairs its inputs with its outputs.
  const auto prior = two_session_prior();
  CHECK(anonymity_of(prior, CovertSet{}) == doctest::Approx(0.0));
  CHECK(anonymity_of(prior, CovertSet{"M1"}) == doctest::Approx(1.0));
  CovertPolicy half;
  half.choices.assign(2, {{CovertSet{}, 0.5}, {CovertSet{"M1"}, 0.5}});
  CHECK(anonymity_of(prior, half) == doctest::Approx(0.5).epsilon(1e-14));

  CovertPolicy bad;
  bad.choices.assign(2, {{CovertSet{}, 0.4}});
  CHECK_THROWS_AS(anonymity_of(prior, bad), std::invalid_argument);
}

TEST_CASE("fano bound") {
  const auto net = switching_network();
  const double h = std::log2(24.0);
  CHECK(fano_bound(0.0, net.prior) == 0.0);
  CHECK(fano_bound(1.0, net.prior) == doctest::Approx((h - 1.0) / h));
  CHECK(fano_bound(0.5, net.prior) == doctest::Approx((0.5 * h - 1.0) / h));
  CHECK_THROWS_AS(fano_bound(1.5, net.prior), std::invalid_argument);
}

TEST_CASE("covert rate table on the switching network") {
  const auto net = switching_network();
  CovertRateTable table(net.topology, net.prior, analytic_options());
  CHECK(table.expected_visible() == doctest::Approx(4.0).epsilon(1e-12));
  const double eps = loss_fraction(2.0, 2.0, 1.0);
  CHECK(table.expected_covert_rate(CovertSet{"M2", "M4"}) == doctest::Approx(4.0 * (1.0 - eps)).epsilon(1e-12));
  CHECK(table.expected_covert_rate(CovertSet{"M1", "M3"}) ==
        doctest::Approx(8.0 * (1.0 - loss_fraction(4.0, 2.0, 1.0))).epsilon(1e-12));
  // Relays off the session's paths do not change the key.
  CHECK(table.covert_rate(0, CovertSet{"M2", "M4", "X"}) == table.covert_rate(0, CovertSet{"M2", "M4"}));
  CHECK_FALSE(table.used_simulation());
}

TEST_CASE("deterministic selection") {
  const auto net = switching_network();
  CovertRateTable table(net.topology, net.prior, analytic_options());
  const auto points = enumerate_deterministic(table);
  REQUIRE(points.size() == 16);
  CHECK(points.front().covert.empty());

  const auto zero = best_deterministic(points, 0.0);
  CHECK(zero.covert.empty());
  CHECK(zero.rate == doctest::Approx(4.0));

  const auto full = best_deterministic(points, 1.0);
  CHECK(full.covert == CovertSet{"M2", "M4"});
  CHECK_THROWS_AS(best_deterministic(points, 1.01), InfeasibleAnonymity);
  CHECK_THROWS_AS(enumerate_deterministic(table, 3), std::length_error);

  const auto hull = convex_hull_deterministic(points);
  REQUIRE(!hull.vertices.empty());
  CHECK(hull.vertices.front().first == points.front().alpha);
  CHECK(hull.vertices.front().second == doctest::Approx(4.0));
  CHECK(hull.vertices.back().first == doctest::Approx(1.0));
  for (const auto& p : points) CHECK(hull.evaluate(p.alpha) >= p.rate - 1e-12);
  for (std::size_t k = 1; k < hull.vertices.size(); ++k) {
    CHECK(hull.vertices[k].first > hull.vertices[k - 1].first);
    CHECK(hull.vertices[k].second <= hull.vertices[k - 1].second);
  }
  CHECK(hull.evaluate(0.0) == doctest::Approx(4.0));
  CHECK(std::isinf(hull.evaluate(1.1)));
}

TEST_CASE("upper hull examples") {
  std::vector<DeterministicPoint> pts{
      {{}, 0.2, 4.0}, {{"a"}, 0.5, 3.0}, {{"b"}, 0.6, 3.5}, {{"c"}, 1.0, 2.0}, {{"d"}, 0.1, 1.0}};
  const auto hull = convex_hull_deterministic(pts);
  REQUIRE(hull.vertices.size() == 3);
  CHECK(hull.vertices[0] == std::make_pair(0.2, 4.0));
  CHECK(hull.vertices[1] == std::make_pair(0.6, 3.5));
  CHECK(hull.vertices[2] == std::make_pair(1.0, 2.0));
  CHECK(hull.evaluate(0.0) == 4.0);
  CHECK(hull.evaluate(0.4) == doctest::Approx(3.75));
  CHECK(hull.evaluate(0.8) == doctest::Approx(2.75));
}

TEST_CASE("distortion matrix on the switching network") {
  const auto net = switching_network();
  CovertRateTable table(net.topology, net.prior, analytic_options());
  const auto m = distortion_matrix(table);
  REQUIRE(m.rows.size() == 24);
  for (std::size_t s = 0; s < 24; ++s) {
    CHECK(m.rows[s].size() == 16);
    const auto empty_obs = observe(net.prior.sessions[s], CovertSet{});
    bool found = false;
    for (const auto& [c, d] : m.rows[s]) {
      CHECK(d >= 0.0);
      CHECK(m.covert_of[s].count(c) == 1);
      if (m.columns[c] == empty_obs) {
        CHECK(d == 0.0);
        found = true;
      }
    }
    CHECK(found);
  }
  // The all-covert observation is common to every session.
  const auto common = observe(net.prior.sessions[0], CovertSet{"M1", "M2", "M3", "M4"});
  for (const auto& s : net.prior.sessions) CHECK(observe(s, CovertSet{"M1", "M2", "M3", "M4"}) == common);
  const auto dense = m.dense();
  CHECK(dense.size() == 24);
  CHECK(dense[0].size() == m.columns.size());
}
