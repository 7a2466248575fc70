#include "anonsched/relay.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "anonsched/analytic.hpp"
#include "anonsched/format.hpp"
#include "anonsched/random.hpp"

namespace anonsched {
namespace {

// For each departure, the index of the arrival it carries or -1.
struct Assignment {
  std::vector<std::ptrdiff_t> departure_to_arrival;
  std::vector<bool> arrival_matched;
};

Assignment greedy_assign(std::span<const double> arrivals, std::span<const double> departures, double delta) {
  Assignment a;
  a.departure_to_arrival.assign(departures.size(), -1);
  a.arrival_matched.assign(arrivals.size(), false);
  std::size_t i = 0;
  for (std::size_t j = 0; j < departures.size(); ++j) {
    const double t = departures[j];
    while (i < arrivals.size() && t - arrivals[i] > delta) ++i;  // window closed: dropped
    if (i < arrivals.size() && arrivals[i] <= t) {
      a.departure_to_arrival[j] = static_cast<std::ptrdiff_t>(i);
      a.arrival_matched[i] = true;
      ++i;
    }
  }
  return a;
}

MatchResult collect(std::span<const double> arrivals, std::span<const double> departures, double delta,
                    const Assignment& a) {
  MatchResult r;
  r.delay_bound = delta;
  for (std::size_t j = 0; j < departures.size(); ++j) {
    if (a.departure_to_arrival[j] >= 0) {
      r.pairs.push_back({arrivals[static_cast<std::size_t>(a.departure_to_arrival[j])], departures[j]});
    } else {
      r.dummies.push_back(departures[j]);
    }
  }
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (!a.arrival_matched[i]) r.dropped.push_back(arrivals[i]);
  }
  return r;
}

bool is_sorted_multiset_union(std::vector<double> parts_a, const std::vector<double>& parts_b,
                              std::span<const double> whole) {
  parts_a.insert(parts_a.end(), parts_b.begin(), parts_b.end());
  std::sort(parts_a.begin(), parts_a.end());
  return std::equal(parts_a.begin(), parts_a.end(), whole.begin(), whole.end());
}

// Runs successive BGM for one ordering. `index_of` maps ordering position to stream index.
void run_priority_segment(const std::vector<std::vector<double>>& stream_epochs, std::vector<double> departures,
                          const std::vector<std::size_t>& priority, double delta, std::vector<MatchResult>& out) {
  for (std::size_t s : priority) {
    MatchResult r = bgm(stream_epochs[s], departures, delta);
    departures = r.dummies;
    auto& acc = out[s];
    acc.pairs.insert(acc.pairs.end(), r.pairs.begin(), r.pairs.end());
    acc.dropped.insert(acc.dropped.end(), r.dropped.begin(), r.dropped.end());
    acc.dummies.insert(acc.dummies.end(), r.dummies.begin(), r.dummies.end());
  }
}

}  // namespace

double MatchResult::drop_fraction() const {
  if (arrivals() == 0) throw std::domain_error("drop_fraction: no arrivals");
  return static_cast<double>(dropped.size()) / static_cast<double>(arrivals());
}

double MatchResult::mean_delay() const {
  if (pairs.empty()) throw std::domain_error("mean_delay: no relayed pairs");
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.departure - p.arrival;
  return sum / static_cast<double>(pairs.size());
}

Estimate MatchResult::drop_fraction_estimate(std::size_t batches) const {
  const std::size_t n = arrivals();
  if (n == 0) throw std::domain_error("drop_fraction_estimate: no arrivals");
  batches = std::clamp<std::size_t>(batches, 1, n);
  // Merge pairs and drops back into arrival order.
  std::vector<std::pair<double, bool>> events;
  events.reserve(n);
  for (const auto& p : pairs) events.emplace_back(p.arrival, false);
  for (double d : dropped) events.emplace_back(d, true);
  std::sort(events.begin(), events.end());
  std::vector<double> num(batches, 0.0), den(batches, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t b = k * batches / n;
    den[b] += 1.0;
    if (events[k].second) num[b] += 1.0;
  }
  return ratio_of_batches(num, den);
}

Estimate MatchResult::mean_delay_estimate(std::size_t batches) const {
  if (pairs.empty()) throw std::domain_error("mean_delay_estimate: no relayed pairs");
  batches = std::clamp<std::size_t>(batches, 1, pairs.size());
  std::vector<double> num(batches, 0.0), den(batches, 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::size_t b = k * batches / pairs.size();
    num[b] += pairs[k].departure - pairs[k].arrival;
    den[b] += 1.0;
  }
  return ratio_of_batches(num, den);
}

void check_match(const MatchResult& r, std::span<const double> arrivals, std::span<const double> departures) {
  std::vector<double> pair_arrivals, pair_departures;
  for (const auto& p : r.pairs) {
    const double d = p.departure - p.arrival;
    if (!(d >= 0.0) || d > r.delay_bound) throw std::logic_error("match pair violates the delay window");
    pair_arrivals.push_back(p.arrival);
    pair_departures.push_back(p.departure);
  }
  for (std::size_t k = 1; k < r.pairs.size(); ++k) {
    if (!(r.pairs[k - 1].arrival <= r.pairs[k].arrival) || !(r.pairs[k - 1].departure < r.pairs[k].departure)) {
      throw std::logic_error("matched pairs are not FIFO");
    }
  }
  if (!is_sorted_multiset_union(pair_arrivals, r.dropped, arrivals)) {
    throw std::logic_error("pairs and drops do not partition the arrivals");
  }
  if (!is_sorted_multiset_union(pair_departures, r.dummies, departures)) {
    throw std::logic_error("pairs and dummies do not partition the departures");
  }
}

MatchResult bgm(std::span<const double> arrivals, std::span<const double> departures, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("bgm: delay bound must be >= 0");
  return collect(arrivals, departures, delta, greedy_assign(arrivals, departures, delta));
}

std::vector<std::ptrdiff_t> bgm_assign(std::span<const double> arrivals, std::span<const double> departures,
                                       double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("bgm: delay bound must be >= 0");
  return greedy_assign(arrivals, departures, delta).departure_to_arrival;
}

MatchResult bgm(const Schedule& arrivals, const Schedule& departures, double delta) {
  return bgm(std::span<const double>(arrivals.epochs()), std::span<const double>(departures.epochs()), delta);
}

PriorityOrder::PriorityOrder(std::vector<NodeId> ordering)
    : PriorityOrder(std::vector<std::vector<NodeId>>{std::move(ordering)}, {1.0}) {}

PriorityOrder::PriorityOrder(std::vector<std::vector<NodeId>> o, std::vector<double> w)
    : orderings(std::move(o)), weights(std::move(w)) {
  if (orderings.empty() || orderings.size() != weights.size()) {
    throw std::invalid_argument("PriorityOrder: need one weight per ordering");
  }
  double total = 0.0;
  for (double x : weights) {
    if (!(x >= 0.0)) throw std::invalid_argument("PriorityOrder: weights must be >= 0");
    total += x;
  }
  if (!(total > 0.0)) throw std::invalid_argument("PriorityOrder: weights must not all be zero");
  for (double& x : weights) x /= total;
  auto reference = orderings.front();
  std::sort(reference.begin(), reference.end());
  if (std::adjacent_find(reference.begin(), reference.end()) != reference.end()) {
    throw std::invalid_argument("PriorityOrder: ordering repeats a source");
  }
  for (const auto& ord : orderings) {
    auto sorted = ord;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != reference) throw std::invalid_argument("PriorityOrder: orderings must permute the same sources");
  }
}

std::vector<MatchResult> priority_relay(std::span<const Schedule> streams, const Schedule& departures,
                                        const PriorityOrder& order, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("priority_relay: delay bound must be >= 0");
  std::vector<NodeId> ids;
  for (const auto& s : streams) ids.push_back(s.node_id());
  {
    auto sorted_ids = ids;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) != sorted_ids.end()) {
      throw std::invalid_argument("priority_relay: streams must have distinct node ids");
    }
    auto expected = order.orderings.front();
    std::sort(expected.begin(), expected.end());
    if (expected != sorted_ids) throw std::invalid_argument("priority_relay: ordering does not match the streams");
  }
  std::vector<std::vector<std::size_t>> priorities;
  for (const auto& ord : order.orderings) {
    std::vector<std::size_t> p;
    for (const auto& id : ord) p.push_back(static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin()));
    priorities.push_back(std::move(p));
  }

  std::vector<MatchResult> out(streams.size());
  for (auto& r : out) r.delay_bound = delta;
  if (order.orderings.size() == 1) {
    std::vector<std::vector<double>> epochs;
    for (const auto& s : streams) epochs.push_back(s.epochs());
    run_priority_segment(epochs, departures.epochs(), priorities.front(), delta, out);
    return out;
  }

  double horizon = departures.horizon();
  for (const auto& s : streams) horizon = std::max(horizon, s.horizon());
  double begin = 0.0;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < priorities.size(); ++k) {
    cumulative += order.weights[k];
    const bool last = k + 1 == priorities.size();
    const double end = last ? std::nextafter(horizon, HUGE_VAL) : horizon * cumulative;
    if (end > begin) {
      std::vector<std::vector<double>> epochs;
      for (const auto& s : streams) epochs.push_back(s.window(begin, end).epochs());
      run_priority_segment(epochs, departures.window(begin, end).epochs(), priorities[k], delta, out);
    }
    begin = end;
  }
  for (auto& r : out) std::sort(r.dummies.begin(), r.dummies.end());
  return out;
}

std::vector<MatchResult> equal_priority_relay(std::span<const Schedule> streams, const Schedule& departures,
                                              double delta) {
  struct Tagged {
    double time;
    const NodeId* node;
    std::size_t stream;
  };
  std::vector<Tagged> merged;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (double t : streams[s].epochs()) merged.push_back({t, &streams[s].node_id(), s});
  }
  std::sort(merged.begin(), merged.end(), [](const Tagged& a, const Tagged& b) {
    if (a.time != b.time) return a.time < b.time;
    if (*a.node != *b.node) return *a.node < *b.node;
    return a.stream < b.stream;
  });
  std::vector<double> times;
  times.reserve(merged.size());
  for (const auto& m : merged) times.push_back(m.time);
  const auto assignment = greedy_assign(times, departures.epochs(), delta);

  std::vector<MatchResult> out(streams.size());
  std::vector<double> dummies;
  for (std::size_t j = 0; j < departures.size(); ++j) {
    const auto idx = assignment.departure_to_arrival[j];
    if (idx < 0) {
      dummies.push_back(departures.epochs()[j]);
    } else {
      const auto& m = merged[static_cast<std::size_t>(idx)];
      out[m.stream].pairs.push_back({m.time, departures.epochs()[j]});
    }
  }
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (!assignment.arrival_matched[i]) out[merged[i].stream].dropped.push_back(merged[i].time);
  }
  for (auto& r : out) {
    r.delay_bound = delta;
    r.dummies = dummies;
  }
  return out;
}

AverageDelayMatch avg_delay_relay(const Schedule& arrivals, const Schedule& departures, double mean_bound) {
  if (!(mean_bound > 0.0)) throw std::invalid_argument("avg_delay_relay: mean delay bound must be > 0");
  AverageDelayMatch out;
  out.source_rate = empirical_rate(arrivals);
  out.relay_rate = empirical_rate(departures);
  out.strict_bound = strict_delay_for_mean(mean_bound, out.source_rate, out.relay_rate);
  out.match = bgm(arrivals, departures, out.strict_bound);
  return out;
}

RandomWalkEstimate random_walk_oracle(double source_rate, double relay_rate, double delta, std::uint64_t steps,
                                      std::uint64_t seed, std::size_t batches) {
  if (steps == 0) throw std::invalid_argument("random_walk_oracle: need at least one step");
  if (!(source_rate > 0.0) || !(relay_rate > 0.0) || !(delta >= 0.0)) {
    throw std::invalid_argument("random_walk_oracle: invalid parameters");
  }
  batches = static_cast<std::size_t>(std::clamp<std::uint64_t>(batches, 1, steps));
  Philox4x32 rng(seed, 0x5157u);
  std::vector<double> upper(batches, 0.0), non_lower(batches, 0.0);
  std::vector<double> interior_sum(batches, 0.0), interior_count(batches, 0.0);
  std::uint64_t lower_total = 0, upper_total = 0;
  double x = 0.0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const std::size_t b = static_cast<std::size_t>(k * batches / steps);
    const double z = rng.exponential(relay_rate) - rng.exponential(source_rate);
    const double v = x + z;
    if (v <= 0.0) {
      x = 0.0;
      ++lower_total;
      continue;
    }
    non_lower[b] += 1.0;
    if (v >= delta) {
      x = delta;
      ++upper_total;
      upper[b] += 1.0;
    } else {
      x = v;
      interior_sum[b] += v;
      interior_count[b] += 1.0;
    }
  }
  RandomWalkEstimate out;
  out.steps = steps;
  out.p_lower = static_cast<double>(lower_total) / static_cast<double>(steps);
  out.p_upper = static_cast<double>(upper_total) / static_cast<double>(steps);
  out.loss = lower_total == steps ? Estimate{1.0, 0.0} : ratio_of_batches(upper, non_lower);
  const double interior_total = std::accumulate(interior_count.begin(), interior_count.end(), 0.0);
  if (interior_total > 0.0) out.mean_interior = ratio_of_batches(interior_sum, interior_count);
  return out;
}

void write_match(std::ostream& out, const MatchResult& r) {
  out << "delta " << format_double(r.delay_bound) << '\n';
  out << "pairs " << r.pairs.size() << '\n';
  for (const auto& p : r.pairs) out << format_double(p.arrival) << ' ' << format_double(p.departure) << '\n';
  out << "drops " << r.dropped.size() << '\n';
  for (double t : r.dropped) out << format_double(t) << '\n';
  out << "dummies " << r.dummies.size() << '\n';
  for (double t : r.dummies) out << format_double(t) << '\n';
}

MatchResult read_match(std::istream& in) {
  auto expect = [&](const char* keyword) {
    std::string word, value;
    if (!(in >> word >> value) || word != keyword) {
      throw std::invalid_argument(std::string("match file: expected '") + keyword + "'");
    }
    return value;
  };
  auto read_number = [&] {
    std::string text;
    if (!(in >> text)) throw std::invalid_argument("match file: truncated");
    return parse_double(text);
  };
  MatchResult r;
  r.delay_bound = parse_double(expect("delta"));
  const auto n_pairs = std::stoull(expect("pairs"));
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const double a = read_number();
    const double d = read_number();
    r.pairs.push_back({a, d});
  }
  const auto n_drops = std::stoull(expect("drops"));
  for (std::size_t k = 0; k < n_drops; ++k) r.dropped.push_back(read_number());
  const auto n_dummies = std::stoull(expect("dummies"));
  for (std::size_t k = 0; k < n_dummies; ++k) r.dummies.push_back(read_number());
  return r;
}

}  // namespace anonsched
