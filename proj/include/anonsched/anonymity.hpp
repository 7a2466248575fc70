#pragma once

// Equivocation-based anonymity of covert-relay choices, deterministic
// selection, and the session-by-observation loss matrix.

#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anonsched/network.hpp"

namespace anonsched {

/// Shannon entropy in bits; zero probabilities contribute nothing.
double entropy_bits(std::span<const double> probabilities);
double entropy_nats(std::span<const double> probabilities);
double entropy_bits(const SessionPrior& prior);

/// q(B|s): for each session of the prior, covert sets with their probabilities.
struct CovertPolicy {
  std::vector<std::vector<std::pair<CovertSet, double>>> choices;

  /// The same covert set for every session.
  static CovertPolicy deterministic(const CovertSet& covert, std::size_t sessions);
};

/// H(S | observation) / H(S), with 1 for a zero-entropy prior.
double anonymity_of(const SessionPrior& prior, const CovertPolicy& policy);
double anonymity_of(const SessionPrior& prior, const CovertSet& covert);
/// The same ratio computed with natural logarithms (cross-check of base invariance).
double anonymity_of_nats(const SessionPrior& prior, const CovertPolicy& policy);

/// Lower bound on the eavesdropper's error probability at anonymity alpha:
/// (alpha H(S) - 1) / log2 |support|, clamped to [0, 1].
double fano_bound(double alpha, const SessionPrior& prior);

/// Covert-set throughput per session, computed once per (session, covert set
/// restricted to the session's relays) and shared by every consumer. Safe to
/// query from several threads.
class CovertRateTable {
 public:
  CovertRateTable(const Topology& topo, const SessionPrior& prior, CovertRateOptions options);

  const SumRate& visible(std::size_t session) const { return visible_.at(session); }
  double expected_visible() const;
  /// Lambda^c of `session` under `covert`.
  double covert_rate(std::size_t session, const CovertSet& covert);
  /// sum_s p(s) Lambda^c(s, covert).
  double expected_covert_rate(const CovertSet& covert);
  bool used_simulation() const;

  const Topology& topology() const noexcept { return topo_; }
  const SessionPrior& prior() const noexcept { return prior_; }
  const CovertRateOptions& options() const noexcept { return options_; }

 private:
  const Topology& topo_;
  const SessionPrior& prior_;
  CovertRateOptions options_;
  EpsilonCache cache_;
  std::vector<SumRate> visible_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::size_t, CovertSet>, double> rates_;
  bool used_simulation_ = false;
};

/// All relays that are interior to some session of the prior.
CovertSet candidate_relays(const SessionPrior& prior);

struct DeterministicPoint {
  CovertSet covert;
  double alpha = 0.0;
  double rate = 0.0;  // expected covert sum-rate
};

/// Every subset of the candidate relays, in increasing bitmask order.
/// Throws std::length_error above `max_relays` candidates.
std::vector<DeterministicPoint> enumerate_deterministic(CovertRateTable& table, std::size_t max_relays = 20);

struct InfeasibleAnonymity : std::runtime_error {
  double max_alpha;
  InfeasibleAnonymity(double target, double max_alpha_);
};

/// Highest-rate point with alpha >= target (ties: fewer covert relays, then
/// lexicographic). Throws InfeasibleAnonymity when none qualifies.
DeterministicPoint best_deterministic(std::span<const DeterministicPoint> points, double alpha_target);

/// Upper concave envelope of deterministic (alpha, rate) points under
/// time-sharing, where any point also serves every lower anonymity target.
struct UpperHull {
  std::vector<std::pair<double, double>> vertices;  // (alpha, rate), alpha increasing, rate decreasing

  /// Rate at anonymity target alpha; -inf above the largest attainable alpha.
  double evaluate(double alpha) const;
};

UpperHull convex_hull_deterministic(std::span<const DeterministicPoint> points);

struct DistortionMatrix {
  std::vector<Observation> columns;
  /// rows[s] lists (column, loss) for every reachable observation, sorted by column.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  /// The unique covert set producing each reachable (session, column).
  std::vector<std::map<std::size_t, CovertSet>> covert_of;

  /// Dense form with +inf for unreachable entries.
  std::vector<std::vector<double>> dense() const;
};

/// d(s, observation) = Lambda^v(s) - Lambda^c(s, B) over all subsets B of the
/// session's relays. Throws std::logic_error if two covert sets give the same
/// observation of one session.
DistortionMatrix distortion_matrix(CovertRateTable& table);

}  // namespace anonsched
