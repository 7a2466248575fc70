#pragma once

// Delay-constrained relaying: bounded greedy match (BGM), priority mapping
// over several input streams, the average-delay variant, and the two-barrier
// random walk that predicts BGM's loss for Poisson inputs.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "anonsched/point_process.hpp"
#include "anonsched/stats.hpp"

namespace anonsched {

struct MatchedPair {
  double arrival = 0.0;
  double departure = 0.0;
  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Outcome of relaying one arrival stream onto a departure schedule.
/// pairs + dropped partition the arrivals; pairs + dummies partition the
/// departures that were available to this stream.
struct MatchResult {
  std::vector<MatchedPair> pairs;
  std::vector<double> dropped;
  std::vector<double> dummies;
  double delay_bound = 0.0;

  std::size_t arrivals() const noexcept { return pairs.size() + dropped.size(); }
  double drop_fraction() const;
  double mean_delay() const;

  /// Drop fraction with a batch-means error; batches are consecutive arrivals.
  Estimate drop_fraction_estimate(std::size_t batches = 200) const;
  /// Mean pair delay with a batch-means error; batches are consecutive pairs.
  Estimate mean_delay_estimate(std::size_t batches = 200) const;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Checks the partition, delay-window and FIFO invariants against the inputs
/// the result was built from; throws std::logic_error on violation.
void check_match(const MatchResult& result, std::span<const double> arrivals, std::span<const double> departures);

/// Bounded greedy match. Each departure takes the earliest unmatched arrival
/// in [departure - delta, departure]; arrivals whose window closed before the
/// current departure are dropped; departures with nothing to send are dummies.
/// Arrivals still waiting when departures run out are dropped.
MatchResult bgm(std::span<const double> arrivals, std::span<const double> departures, double delta);
MatchResult bgm(const Schedule& arrivals, const Schedule& departures, double delta);

/// The same match by index: entry j is the arrival carried by departure j, or
/// -1 for a dummy. Arrivals need only be nondecreasing.
std::vector<std::ptrdiff_t> bgm_assign(std::span<const double> arrivals, std::span<const double> departures,
                                       double delta);

/// Priority orderings over source node ids with time-sharing weights.
struct PriorityOrder {
  std::vector<std::vector<NodeId>> orderings;
  std::vector<double> weights;

  PriorityOrder() = default;
  /// One ordering, used for the whole horizon.
  explicit PriorityOrder(std::vector<NodeId> ordering);
  PriorityOrder(std::vector<std::vector<NodeId>> orderings, std::vector<double> weights);
};

/// Priority mapping: at each departure the earliest in-window packet of the
/// highest-priority stream present is sent. Implemented as successive BGM in
/// priority order; with several orderings the horizon is split into
/// consecutive segments proportional to the weights. Results are returned in
/// the order of `streams`; each result's dummies are the departures it was
/// offered but did not use.
std::vector<MatchResult> priority_relay(std::span<const Schedule> streams, const Schedule& departures,
                                        const PriorityOrder& order, double delta);

/// BGM on the merged stream, ignoring origin. Cross-stream ties are ordered by
/// node id. Every result carries the relay's full dummy list.
std::vector<MatchResult> equal_priority_relay(std::span<const Schedule> streams, const Schedule& departures,
                                              double delta);

struct AverageDelayMatch {
  MatchResult match;
  double strict_bound = 0.0;  // +inf selects pure FIFO
  double source_rate = 0.0;   // estimated from the arrivals
  double relay_rate = 0.0;    // estimated from the departures
};

/// BGM with the strict bound whose predicted mean delay equals `mean_bound`,
/// using rates estimated from the inputs.
AverageDelayMatch avg_delay_relay(const Schedule& arrivals, const Schedule& departures, double mean_bound);

struct RandomWalkEstimate {
  std::uint64_t steps = 0;
  double p_lower = 0.0;  // fraction of steps absorbed at 0 (dummy)
  double p_upper = 0.0;  // fraction of steps absorbed at delta (drop)
  Estimate loss;         // p_upper / (1 - p_lower)
  Estimate mean_interior;
};

/// X_j = min(max(X_{j-1} + Z_j, 0), delta) with Z_j = Exp(mean 1/C_B) - Exp(mean 1/C_S).
/// Shares no code with bgm.
RandomWalkEstimate random_walk_oracle(double source_rate, double relay_rate, double delta, std::uint64_t steps,
                                      std::uint64_t seed, std::size_t batches = 200);

/// Three sections: `delta`, `pairs <n>`, `drops <n>`, `dummies <n>`.
void write_match(std::ostream& out, const MatchResult& result);
MatchResult read_match(std::istream& in);

}  // namespace anonsched
