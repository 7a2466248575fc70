#pragma once

// Node transmission schedules: generation, rate measurement and the
// line-oriented text format.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "anonsched/stats.hpp"

namespace anonsched {

using NodeId = std::string;

/// Strictly increasing transmission epochs of one node on [0, horizon].
class Schedule {
 public:
  Schedule() = default;
  /// Horizon defaults to the last epoch (0 for an empty schedule).
  Schedule(NodeId node_id, std::vector<double> epochs);
  Schedule(NodeId node_id, std::vector<double> epochs, double horizon);

  const NodeId& node_id() const noexcept { return node_id_; }
  const std::vector<double>& epochs() const noexcept { return epochs_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t size() const noexcept { return epochs_.size(); }
  bool empty() const noexcept { return epochs_.empty(); }

  /// Epochs falling in [begin, end).
  Schedule window(double begin, double end) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  NodeId node_id_;
  std::vector<double> epochs_;
  double horizon_ = 0.0;
};

/// Transmission-rate cap of one node, in packets/second.
struct RateBound {
  NodeId node_id;
  double capacity = 0.0;

  RateBound() = default;
  RateBound(NodeId id, double cap);
};

struct GenSpec {
  double rate = 1.0;     // packets/second, > 0
  double horizon = 0.0;  // seconds, >= 0
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // substream; use one per node
};

/// Homogeneous Poisson realization on [0, horizon] from cumulative
/// exponential gaps. Same spec, same epochs.
Schedule gen_poisson(const GenSpec& spec, NodeId node_id = {});

/// n / Y(n): the finite-horizon stand-in for the asymptotic rate.
double empirical_rate(const Schedule& schedule);

/// empirical_rate with its Poisson standard error rate/sqrt(n).
Estimate empirical_rate_estimate(const Schedule& schedule);

/// True iff every node's empirical rate is within its cap. Empty schedules
/// transmit nothing and are always valid. Throws if a node has no bound.
bool validate_network_schedule(std::span<const Schedule> schedules, std::span<const RateBound> bounds);

/// Header `node <id> rate <C>` then one epoch per line.
void write_schedule(std::ostream& out, const Schedule& schedule, double capacity);

struct ScheduleRecord {
  Schedule schedule;
  RateBound bound;
};

ScheduleRecord read_schedule(std::istream& in);

}  // namespace anonsched
