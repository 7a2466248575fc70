#pragma once

// Multihop sessions over a capacitated directed graph: the eavesdropper's
// observation map, the visible sum-rate program, covert-relay losses, and a
// packet-level simulation of a whole session.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "anonsched/point_process.hpp"
#include "anonsched/stats.hpp"

namespace anonsched {

using Path = std::vector<NodeId>;
/// Sorted, duplicate-free set of paths.
using PathSet = std::vector<Path>;
using CovertSet = std::set<NodeId>;
/// What the eavesdropper sees: a PathSet of (possibly truncated or split) paths.
using Observation = PathSet;

PathSet canonical(PathSet paths);

class Topology {
 public:
  void add_node(const NodeId& id, double capacity);
  void add_edge(const NodeId& from, const NodeId& to);

  bool has_node(const NodeId& id) const { return nodes_.count(id) != 0; }
  bool has_edge(const NodeId& from, const NodeId& to) const { return edges_.count({from, to}) != 0; }
  double capacity(const NodeId& id) const;
  const std::map<NodeId, double>& nodes() const noexcept { return nodes_; }
  const std::set<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }

  /// At least two nodes, no repeats, consecutive pairs are edges.
  bool valid_path(const Path& path) const;

 private:
  std::map<NodeId, double> nodes_;
  std::set<std::pair<NodeId, NodeId>> edges_;
};

struct Session {
  std::string label;
  PathSet paths;  // canonical

  Session() = default;
  Session(std::string label, PathSet paths);

  /// Nodes strictly inside some path (the candidate relays).
  std::set<NodeId> interior_relays() const;
  /// Canonical text used for hashing and cache keys.
  std::string key() const;
};

struct SessionPrior {
  std::vector<Session> sessions;
  std::vector<double> probabilities;
};

/// Throws std::invalid_argument on invalid paths, probabilities or duplicates.
void validate(const Topology& topo, const SessionPrior& prior);

/// One application of the observation map. Without `covert`, drop the last node
/// of every path (destinations are not observable). With a covert node b, split
/// each path containing b into the part before b and the part from b on; an
/// empty part is dropped and other paths pass through.
PathSet observe_single(const PathSet& paths, const std::optional<NodeId>& covert);

/// Destination stripping followed by one split per covert node.
Observation observe(const Session& session, const CovertSet& covert);

struct SumRate {
  double total = 0.0;
  std::vector<double> per_path;  // aligned with Session::paths
  double std_error = 0.0;
};

/// Maximum of sum(lambda) subject to every node's capacity over the paths
/// through it. Among maximizers, the max-min fair allocation is returned.
SumRate max_sum_rate_visible(const Session& session, const Topology& topo);

enum class EpsilonMode { Analytic, Simulated, Auto };

struct SimulationOptions {
  double delta = 1.0;          // strict delay bound at covert relays, seconds
  double horizon = 2e4;        // source emission window, seconds
  std::uint64_t seed = 1;
  double proc_delay = 1e-6;    // forwarding delay at visible relays, seconds
  bool boost_sources = true;   // sources feeding a covert first hop send at capacity
  std::size_t batches = 100;   // batch count for standard errors
};

/// Per-path source rates injected into the network: the visible allocation,
/// raised for paths whose first hop is covert when boosting is on (the spare
/// source capacity is shared in proportion to the visible allocation).
std::vector<double> injected_rates(const Session& session, const CovertSet& covert, const Topology& topo,
                                   const SumRate& visible, bool boost_sources);

struct SessionSimulation {
  std::vector<double> injected;           // per path, packets/second
  std::vector<Estimate> delivered_rate;   // per path, real packets/second at the destination
  /// Drop fraction of path p at covert relay u, keyed (p, u).
  std::map<std::pair<std::size_t, NodeId>, Estimate> loss;
  std::map<NodeId, std::size_t> transmissions;  // every send, dummies included
  double horizon = 0.0;
};

/// Sources emit Poisson streams per path; visible relays forward everything
/// (dummies too) after proc_delay; covert relays draw their own Poisson
/// departures and run BGM on the joint stream of real packets, tagging
/// dummies round-robin over their outgoing paths.
SessionSimulation simulate_session(const Session& session, const CovertSet& covert, const Topology& topo,
                                   const SimulationOptions& options);

/// Simulation results shared across callers, computed at most once per key.
class EpsilonCache {
 public:
  using Loss = std::map<std::pair<std::size_t, NodeId>, Estimate>;
  /// Returns the cached value for `key` or inserts compute()'s result.
  Loss get_or_compute(const std::string& key, const std::function<Loss()>& compute);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Loss> entries_;
};

struct CovertRateOptions {
  SimulationOptions simulation;
  EpsilonMode mode = EpsilonMode::Auto;
  EpsilonCache* cache = nullptr;
};

struct CovertRate {
  SumRate rate;
  /// Loss fraction of path p at covert relay u, keyed (p, u).
  std::map<std::pair<std::size_t, NodeId>, Estimate> loss;
  bool used_simulation = false;
};

/// lambda_i = T_i * prod over covert relays on path i of (1 - eps), capped at
/// the visible allocation. At a covert relay none of whose inputs crossed an
/// earlier covert relay, eps = f_e(joint input rate, C_B) is exact. Elsewhere
/// Auto simulates the session; Analytic applies f_e to the thinned input rate
/// (treating the thinned stream as Poisson, an approximation); Simulated
/// simulates every relay.
CovertRate covert_sum_rate(const Session& session, const CovertSet& covert, const Topology& topo,
                           const CovertRateOptions& options);

/// Text format: `node <id> cap <C>`, `edge <a> <b>`, then blocks of
/// `session <probability> [label]`, `path <n1> <n2> ...` lines, `end`.
/// `#` starts a comment.
struct NetworkConfig {
  Topology topology;
  SessionPrior prior;
};
NetworkConfig read_network(std::istream& in);
void write_network(std::ostream& out, const NetworkConfig& config);

/// The 4x4 switching network: sources S1..S4, relays M1..M4, destinations
/// D1..D4, every node at `capacity`, uniform prior over the 24 one-to-one
/// source-destination assignments.
NetworkConfig switching_network(double capacity = 2.0);

}  // namespace anonsched
