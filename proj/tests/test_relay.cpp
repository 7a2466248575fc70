#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "anonsched/analytic.hpp"
#include "anonsched/point_process.hpp"
#include "anonsched/relay.hpp"

using namespace anonsched;

namespace {

// Largest order-preserving matching with delay window [0, delta] (LCS-style DP).
std::size_t max_fifo_pairs(const std::vector<double>& a, const std::vector<double>& d, double delta) {
  std::vector<std::vector<std::size_t>> best(a.size() + 1, std::vector<std::size_t>(d.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= d.size(); ++j) {
      best[i][j] = std::max(best[i - 1][j], best[i][j - 1]);
      const double gap = d[j - 1] - a[i - 1];
      if (gap >= 0.0 && gap <= delta) best[i][j] = std::max(best[i][j], best[i - 1][j - 1] + 1);
    }
  }
  return best[a.size()][d.size()];
}

std::vector<double> random_epochs(std::mt19937_64& rng, std::size_t n, double span, bool grid) {
  std::uniform_real_distribution<double> u(0.0, span);
  std::uniform_int_distribution<int> g(0, static_cast<int>(span * 4));
  std::vector<double> out;
  while (out.size() < n) {
    out.push_back(grid ? g(rng) / 4.0 : u(rng));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

}  // namespace

TEST_CASE("bgm examples") {
  const std::vector<double> a1{1.0, 2.0}, d1{1.5, 2.5};
  const auto r1 = bgm(a1, d1, 1.0);
  CHECK(r1.pairs == std::vector<MatchedPair>{{1.0, 1.5}, {2.0, 2.5}});
  CHECK(r1.dropped.empty());
  CHECK(r1.dummies.empty());

  const std::vector<double> a2{1.0}, d2{5.0};
  const auto r2 = bgm(a2, d2, 1.0);
  CHECK(r2.pairs.empty());
  CHECK(r2.dropped == std::vector<double>{1.0});
  CHECK(r2.dummies == std::vector<double>{5.0});

  SUBCASE("equal epochs are usable and delay may equal the bound") {
    const std::vector<double> a{1.0, 2.0}, d{1.0, 3.0};
    const auto r = bgm(a, d, 1.0);
    CHECK(r.pairs.size() == 2);
  }
  SUBCASE("degenerate inputs") {
    const std::vector<double> none, some{1.0, 2.0};
    CHECK(bgm(none, some, 1.0).dummies.size() == 2);
    CHECK(bgm(some, none, 1.0).dropped.size() == 2);
  }
  SUBCASE("infinite bound is FIFO") {
    const std::vector<double> a{0.0, 1.0, 2.0}, d{10.0, 20.0, 30.0};
    CHECK(bgm(a, d, INFINITY).pairs.size() == 3);
  }
  CHECK_THROWS(bgm(a1, d1, -1.0));
}

TEST_CASE("bgm is drop-minimal and satisfies its invariants") {
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<std::size_t> size(0, 12);
  std::uniform_real_distribution<double> delta_dist(0.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const bool grid = trial % 2 == 0;  // grids exercise ties
    const auto a = random_epochs(rng, size(rng), 10.0, grid);
    const auto d = random_epochs(rng, size(rng), 10.0, grid);
    const double delta = grid ? std::round(delta_dist(rng) * 4.0) / 4.0 : delta_dist(rng);
    const auto r = bgm(a, d, delta);
    CHECK_NOTHROW(check_match(r, a, d));
    CHECK(r.pairs.size() == max_fifo_pairs(a, d, delta));
  }
}

TEST_CASE("bgm with tied arrivals") {
  const std::vector<double> a{1.0, 1.0, 1.0};
  const std::vector<double> d{1.0, 1.5, 3.0};
  const auto r = bgm(a, d, 1.0);
  CHECK_NOTHROW(check_match(r, a, d));
  CHECK(r.pairs.size() == 2);
  CHECK(r.dropped == std::vector<double>{1.0});
  CHECK(r.dummies == std::vector<double>{3.0});
}

TEST_CASE("bgm drops are nonincreasing in the delay bound") {
  const auto a = gen_poisson({1.0, 2000.0, 1, 0});
  const auto d = gen_poisson({1.1, 2000.0, 1, 1});
  std::size_t prev = a.size() + 1;
  for (double delta : {0.0, 0.1, 0.3, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, static_cast<double>(INFINITY)}) {
    const auto r = bgm(a, d, delta);
    CHECK(r.dropped.size() <= prev);
    prev = r.dropped.size();
  }
}

TEST_CASE("priority relay") {
  const double h = 5000.0;
  const Schedule s1 = gen_poisson({1.0, h, 3, 0}, "S1");
  const Schedule s2 = gen_poisson({0.8, h, 3, 1}, "S2");
  const Schedule b = gen_poisson({2.0, h, 3, 2}, "B");
  const double delta = 1.0;

  SUBCASE("single stream equals bgm") {
    const std::vector<Schedule> one{s1};
    const auto r = priority_relay(one, b, PriorityOrder({"S1"}), delta);
    CHECK(r.at(0) == bgm(s1, b, delta));
  }
  SUBCASE("top priority stream equals bgm") {
    const std::vector<Schedule> two{s2, s1};
    const auto r = priority_relay(two, b, PriorityOrder({"S1", "S2"}), delta);
    CHECK(r[1] == bgm(s1, b, delta));
    CHECK(r[0] == bgm(s2, Schedule("B", r[1].dummies, b.horizon()), delta));
    // The two streams never share a departure.
    std::vector<double> used;
    for (const auto& res : r) {
      for (const auto& p : res.pairs) used.push_back(p.departure);
    }
    std::sort(used.begin(), used.end());
    CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
  }
  SUBCASE("time-sharing splits the horizon") {
    const std::vector<Schedule> two{s1, s2};
    const PriorityOrder order({{"S1", "S2"}, {"S2", "S1"}}, {1.0, 1.0});
    const auto r = priority_relay(two, b, order, delta);
    for (std::size_t i = 0; i < 2; ++i) CHECK(r[i].arrivals() == two[i].size());
    const auto first_half = priority_relay(std::vector<Schedule>{s1.window(0, h / 2), s2.window(0, h / 2)},
                                           b.window(0, h / 2), PriorityOrder({"S1", "S2"}), delta);
    CHECK(first_half[0].pairs ==
          std::vector<MatchedPair>(r[0].pairs.begin(), r[0].pairs.begin() + first_half[0].pairs.size()));
  }
  SUBCASE("bad orders") {
    CHECK_THROWS(PriorityOrder({{"S1", "S1"}}, {1.0}));
    CHECK_THROWS(PriorityOrder({{"S1", "S2"}, {"S1", "S3"}}, {0.5, 0.5}));
    CHECK_THROWS(PriorityOrder({{"S1"}}, {0.0}));
    const std::vector<Schedule> two{s1, s2};
    CHECK_THROWS(priority_relay(two, b, PriorityOrder({"S1"}), delta));
  }
}

TEST_CASE("equal-priority relay matches the merged-stream loss") {
  const double h = 1e6;
  const double t1 = 0.7, t2 = 0.6, cb = 2.0, delta = 1.0;
  const std::vector<Schedule> streams{gen_poisson({t1, h, 8, 0}, "S1"), gen_poisson({t2, h, 8, 1}, "S2")};
  const Schedule b = gen_poisson({cb, h + 50.0, 8, 2}, "B");
  const auto r = equal_priority_relay(streams, b, delta);
  const double fe = loss_fraction(t1 + t2, cb, delta);
  for (const auto& res : r) {
    const auto est = res.drop_fraction_estimate();
    CHECK(est.within(fe));
  }
  CHECK(r[0].dummies == r[1].dummies);
  CHECK(r[0].pairs.size() + r[1].pairs.size() + r[0].dummies.size() == b.size());
}

TEST_CASE("equal-priority ties are broken by node id") {
  const std::vector<Schedule> streams{Schedule("b", {1.0}), Schedule("a", {1.0})};
  const Schedule dep("B", {1.5});
  const auto r = equal_priority_relay(streams, dep, 1.0);
  CHECK(r[1].pairs.size() == 1);
  CHECK(r[0].pairs.empty());
  CHECK(r[0].dropped == std::vector<double>{1.0});
}

TEST_CASE("average-delay relay") {
  const double h = 2e5;
  SUBCASE("fast relay never drops") {
    const auto a = gen_poisson({1.0, h, 31, 0});
    const auto d = gen_poisson({3.0, h + 50.0, 31, 1});
    const auto r = avg_delay_relay(a, d, 1.0);
    CHECK(std::isinf(r.strict_bound));
    CHECK(r.match.dropped.empty());
  }
  SUBCASE("mean delay meets the target and relaxing never hurts") {
    const auto a = gen_poisson({1.0, h, 32, 0});
    const auto d = gen_poisson({1.2, h + 50.0, 32, 1});
    const double target = 0.8;
    const auto r = avg_delay_relay(a, d, target);
    CHECK(std::isfinite(r.strict_bound));
    CHECK(r.match.mean_delay_estimate().within(target));
    CHECK(r.match.drop_fraction() <= bgm(a, d, target).drop_fraction());
  }
  CHECK_THROWS(avg_delay_relay(Schedule("a", {}), Schedule("b", {1.0}), 1.0));
}

TEST_CASE("random walk oracle") {
  SUBCASE("zero window loses everything") {
    const auto rw = random_walk_oracle(1.0, 1.0, 0.0, 10000, 1);
    CHECK(rw.loss.value == doctest::Approx(1.0));
  }
  SUBCASE("equal rates") {
    const auto rw = random_walk_oracle(1.0, 1.0, 1.0, 2000000, 2);
    CHECK(rw.loss.within(0.5));
    CHECK(rw.mean_interior.within(mean_delay(1.0, 1.0, 1.0)));
  }
  SUBCASE("faster relay") {
    const auto rw = random_walk_oracle(1.0, 2.0, 1.0, 2000000, 3);
    CHECK(rw.loss.within(loss_fraction(1.0, 2.0, 1.0)));
    CHECK(rw.mean_interior.within(mean_delay(1.0, 1.0, 2.0)));
  }
}

TEST_CASE("match text round trip") {
  const auto a = gen_poisson({1.0, 100.0, 4, 0});
  const auto d = gen_poisson({1.5, 100.0, 4, 1});
  const auto r = bgm(a, d, 0.7);
  std::stringstream buf;
  write_match(buf, r);
  CHECK(read_match(buf) == r);
}
