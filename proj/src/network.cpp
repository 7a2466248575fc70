#include "anonsched/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "anonsched/analytic.hpp"
#include "anonsched/format.hpp"
#include "anonsched/lp.hpp"
#include "anonsched/random.hpp"
#include "anonsched/relay.hpp"

namespace anonsched {
namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string join(const Path& path, char sep) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += sep;
    out += path[i];
  }
  return out;
}

std::size_t position(const Path& path, const NodeId& node) {
  return static_cast<std::size_t>(std::find(path.begin(), path.end(), node) - path.begin());
}

bool is_interior(const Path& path, const NodeId& node) {
  const auto pos = position(path, node);
  return pos > 0 && pos + 1 < path.size();
}

// Nodes of the session in an order where every path visits them left to right.
std::vector<NodeId> topological_order(const Session& session) {
  std::map<NodeId, std::set<NodeId>> succ;
  std::map<NodeId, std::size_t> indegree;
  for (const auto& p : session.paths) {
    for (const auto& n : p) indegree.emplace(n, 0);
  }
  for (const auto& p : session.paths) {
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      if (succ[p[k]].insert(p[k + 1]).second) ++indegree[p[k + 1]];
    }
  }
  std::deque<NodeId> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push_back(n);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    const NodeId n = ready.front();
    ready.pop_front();
    order.push_back(n);
    for (const auto& m : succ[n]) {
      if (--indegree[m] == 0) ready.push_back(m);
    }
  }
  if (order.size() != indegree.size()) throw std::invalid_argument("session paths form a cycle");
  return order;
}

CovertSet active_covert(const Session& session, const CovertSet& covert) {
  const auto interior = session.interior_relays();
  CovertSet out;
  for (const auto& n : covert) {
    if (interior.count(n)) out.insert(n);
  }
  return out;
}

// True if some path through `node` crosses a covert relay before reaching it.
bool has_covert_upstream(const Session& session, const CovertSet& covert, const NodeId& node) {
  for (const auto& p : session.paths) {
    if (!is_interior(p, node)) continue;
    const auto pos = position(p, node);
    for (std::size_t k = 1; k < pos; ++k) {
      if (covert.count(p[k])) return true;
    }
  }
  return false;
}

std::string covert_text(const CovertSet& covert) {
  std::string out;
  for (const auto& n : covert) {
    if (!out.empty()) out += ',';
    out += n;
  }
  return out;
}

}  // namespace

PathSet canonical(PathSet paths) {
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  return paths;
}

void Topology::add_node(const NodeId& id, double capacity) {
  if (id.empty()) throw std::invalid_argument("topology: empty node id");
  if (nodes_.count(id)) throw std::invalid_argument("topology: duplicate node '" + id + "'");
  RateBound check(id, capacity);
  nodes_.emplace(id, capacity);
}

void Topology::add_edge(const NodeId& from, const NodeId& to) {
  if (!has_node(from) || !has_node(to)) {
    throw std::invalid_argument("topology: edge " + from + " -> " + to + " references an unknown node");
  }
  if (from == to) throw std::invalid_argument("topology: self-loop at '" + from + "'");
  edges_.emplace(from, to);
}

double Topology::capacity(const NodeId& id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::invalid_argument("topology: unknown node '" + id + "'");
  return it->second;
}

bool Topology::valid_path(const Path& path) const {
  if (path.size() < 2) return false;
  auto sorted = path;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (!has_edge(path[k], path[k + 1])) return false;
  }
  return true;
}

Session::Session(std::string l, PathSet p) : label(std::move(l)), paths(canonical(std::move(p))) {}

std::set<NodeId> Session::interior_relays() const {
  std::set<NodeId> out;
  for (const auto& p : paths) {
    for (std::size_t k = 1; k + 1 < p.size(); ++k) out.insert(p[k]);
  }
  return out;
}

std::string Session::key() const {
  std::string out;
  for (const auto& p : paths) {
    if (!out.empty()) out += ';';
    out += join(p, '>');
  }
  return out;
}

void validate(const Topology& topo, const SessionPrior& prior) {
  if (prior.sessions.empty()) throw std::invalid_argument("prior: no sessions");
  if (prior.sessions.size() != prior.probabilities.size()) {
    throw std::invalid_argument("prior: one probability per session required");
  }
  double total = 0.0;
  std::set<std::string> keys;
  for (std::size_t s = 0; s < prior.sessions.size(); ++s) {
    const auto& session = prior.sessions[s];
    if (session.paths.empty()) throw std::invalid_argument("session '" + session.label + "' has no paths");
    for (const auto& p : session.paths) {
      if (!topo.valid_path(p)) {
        throw std::invalid_argument("session '" + session.label + "': invalid path " + join(p, ' '));
      }
    }
    if (!keys.insert(session.key()).second) {
      throw std::invalid_argument("prior: session '" + session.label + "' repeats an earlier path set");
    }
    const double prob = prior.probabilities[s];
    if (!(prob > 0.0) || !std::isfinite(prob)) {
      throw std::invalid_argument("prior: probability of '" + session.label + "' must be positive");
    }
    total += prob;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("prior: probabilities sum to " + format_double(total) + ", not 1");
  }
}

PathSet observe_single(const PathSet& paths, const std::optional<NodeId>& covert) {
  PathSet out;
  for (const auto& p : paths) {
    if (!covert) {
      if (p.size() > 1) out.emplace_back(p.begin(), p.end() - 1);
      continue;
    }
    auto begin = p.begin();
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (*it != *covert) continue;
      if (it != begin) out.emplace_back(begin, it);
      begin = it;
    }
    out.emplace_back(begin, p.end());
  }
  return canonical(std::move(out));
}

Observation observe(const Session& session, const CovertSet& covert) {
  PathSet view = observe_single(session.paths, std::nullopt);
  for (const auto& b : covert) view = observe_single(view, b);
  return view;
}

SumRate max_sum_rate_visible(const Session& session, const Topology& topo) {
  const std::size_t n = session.paths.size();
  std::map<NodeId, std::vector<std::size_t>> users;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& node : session.paths[i]) users[node].push_back(i);
  }
  std::vector<LpConstraint> caps;
  for (const auto& [node, paths] : users) {
    LpConstraint row;
    row.coeffs.assign(n, 0.0);
    for (auto i : paths) row.coeffs[i] = 1.0;
    row.rhs = topo.capacity(node);
    caps.push_back(std::move(row));
  }
  const std::vector<double> ones(n, 1.0);
  const auto first = lp_maximize(ones, caps);
  if (first.status != LpResult::Status::Optimal) throw std::logic_error("visible sum-rate program did not solve");

  SumRate out;
  out.total = first.objective;
  out.per_path = first.x;

  // Among maximizers, maximize the smallest path rate.
  std::vector<LpConstraint> fair;
  for (auto row : caps) {
    row.coeffs.push_back(0.0);
    fair.push_back(std::move(row));
  }
  LpConstraint sum_row;
  sum_row.coeffs.assign(n + 1, 1.0);
  sum_row.coeffs[n] = 0.0;
  sum_row.sense = LpConstraint::Sense::GreaterEqual;
  sum_row.rhs = first.objective;
  fair.push_back(sum_row);
  for (std::size_t i = 0; i < n; ++i) {
    LpConstraint row;
    row.coeffs.assign(n + 1, 0.0);
    row.coeffs[i] = 1.0;
    row.coeffs[n] = -1.0;
    row.sense = LpConstraint::Sense::GreaterEqual;
    fair.push_back(std::move(row));
  }
  std::vector<double> objective(n + 1, 0.0);
  objective[n] = 1.0;
  const auto second = lp_maximize(objective, fair);
  if (second.status == LpResult::Status::Optimal) {
    out.per_path.assign(second.x.begin(), second.x.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

std::vector<double> injected_rates(const Session& session, const CovertSet& covert, const Topology& topo,
                                   const SumRate& visible, bool boost_sources) {
  std::vector<double> rates = visible.per_path;
  if (!boost_sources) return rates;
  const CovertSet active = active_covert(session, covert);
  std::map<NodeId, std::vector<std::size_t>> boosted;
  std::map<NodeId, double> fixed;
  for (std::size_t i = 0; i < session.paths.size(); ++i) {
    const auto& p = session.paths[i];
    if (p.size() > 2 && active.count(p[1])) {
      boosted[p[0]].push_back(i);
    } else {
      fixed[p[0]] += visible.per_path[i];
    }
  }
  for (const auto& [source, paths] : boosted) {
    const double spare = std::max(0.0, topo.capacity(source) - fixed[source]);
    double weight = 0.0;
    for (auto i : paths) weight += visible.per_path[i];
    for (auto i : paths) {
      const double share = weight > 0.0 ? visible.per_path[i] / weight : 1.0 / static_cast<double>(paths.size());
      rates[i] = std::max(visible.per_path[i], spare * share);
    }
  }
  return rates;
}

SessionSimulation simulate_session(const Session& session, const CovertSet& covert, const Topology& topo,
                                   const SimulationOptions& options) {
  if (!(options.horizon > 0.0)) throw std::invalid_argument("simulate_session: horizon must be > 0");
  if (!(options.delta >= 0.0)) throw std::invalid_argument("simulate_session: delay bound must be >= 0");
  if (!(options.proc_delay >= 0.0)) throw std::invalid_argument("simulate_session: processing delay must be >= 0");
  const std::size_t batches = std::max<std::size_t>(1, options.batches);
  const CovertSet active = active_covert(session, covert);
  const auto visible = max_sum_rate_visible(session, topo);

  SessionSimulation out;
  out.horizon = options.horizon;
  out.injected = injected_rates(session, active, topo, visible, options.boost_sources);
  const std::uint64_t base = derive_seed(options.seed, fnv1a(session.key()));
  const double horizon = options.horizon;
  auto batch_of = [&](double origin) {
    const auto b = static_cast<std::size_t>(origin / horizon * static_cast<double>(batches));
    return std::min(b, batches - 1);
  };

  struct Packet {
    double time;
    double origin;
    std::size_t path;
    bool dummy;
  };
  std::map<NodeId, std::vector<Packet>> inbox;
  const auto& paths = session.paths;
  auto send = [&](const NodeId& from, const Packet& pkt) {
    const auto& p = paths[pkt.path];
    inbox[p[position(p, from) + 1]].push_back(pkt);
    ++out.transmissions[from];
  };

  std::vector<std::vector<double>> delivered(paths.size(), std::vector<double>(batches, 0.0));
  std::map<NodeId, std::uint64_t> stream_of;
  {
    std::uint64_t k = 0;
    for (const auto& [id, cap] : topo.nodes()) {
      (void)cap;
      stream_of[id] = 1'000'000 + k++;
    }
  }

  for (const auto& node : topological_order(session)) {
    // Fresh source packets.
    for (std::size_t i = 0; i < paths.size(); ++i) {
      if (paths[i].front() != node || !(out.injected[i] > 0.0)) continue;
      const auto s = gen_poisson({out.injected[i], horizon, base, i});
      for (double t : s.epochs()) send(node, {t, t, i, false});
    }
    auto received = std::move(inbox[node]);
    inbox.erase(node);
    if (received.empty()) continue;

    std::vector<Packet> relay_in;
    for (const auto& pkt : received) {
      const auto& p = paths[pkt.path];
      const auto pos = position(p, node);
      if (pos + 1 == p.size()) {
        if (!pkt.dummy) delivered[pkt.path][batch_of(pkt.origin)] += 1.0;
      } else if (!active.count(node)) {
        send(node, {pkt.time + options.proc_delay, pkt.origin, pkt.path, pkt.dummy});
      } else if (!pkt.dummy) {
        relay_in.push_back(pkt);
      }
    }
    if (!active.count(node)) continue;

    // Covert relay: independent Poisson departures, BGM on the joint stream.
    std::vector<std::size_t> outgoing;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      if (is_interior(paths[i], node)) outgoing.push_back(i);
    }
    std::sort(relay_in.begin(), relay_in.end(), [](const Packet& a, const Packet& b) {
      return a.time != b.time ? a.time < b.time : a.path < b.path;
    });
    const double cap = topo.capacity(node);
    const double last_arrival = relay_in.empty() ? horizon : std::max(horizon, relay_in.back().time);
    const double tail = std::isfinite(options.delta) ? options.delta : 50.0 / cap;
    const auto departures = gen_poisson({cap, last_arrival + tail, base, stream_of.at(node)}, node);
    std::vector<double> times;
    times.reserve(relay_in.size());
    for (const auto& pkt : relay_in) times.push_back(pkt.time);
    const auto assignment = bgm_assign(times, departures.epochs(), options.delta);

    std::map<std::size_t, std::vector<double>> arrivals, drops;
    for (auto i : outgoing) {
      arrivals[i].assign(batches, 0.0);
      drops[i].assign(batches, 0.0);
    }
    std::vector<bool> carried(relay_in.size(), false);
    std::size_t round_robin = 0;
    for (std::size_t j = 0; j < departures.size(); ++j) {
      const double t = departures.epochs()[j];
      if (assignment[j] >= 0) {
        const auto idx = static_cast<std::size_t>(assignment[j]);
        carried[idx] = true;
        send(node, {t, relay_in[idx].origin, relay_in[idx].path, false});
      } else {
        send(node, {t, t, outgoing[round_robin++ % outgoing.size()], true});
      }
    }
    for (std::size_t k = 0; k < relay_in.size(); ++k) {
      const auto b = batch_of(relay_in[k].origin);
      arrivals[relay_in[k].path][b] += 1.0;
      if (!carried[k]) drops[relay_in[k].path][b] += 1.0;
    }
    for (auto i : outgoing) {
      const double total = std::accumulate(arrivals[i].begin(), arrivals[i].end(), 0.0);
      out.loss[{i, node}] = total > 0.0 ? ratio_of_batches(drops[i], arrivals[i]) : Estimate{0.0, 0.0};
    }
  }

  const double width = horizon / static_cast<double>(batches);
  for (auto& counts : delivered) {
    for (double& c : counts) c /= width;
    out.delivered_rate.push_back(mean_of_batches(counts));
  }
  return out;
}

EpsilonCache::Loss EpsilonCache::get_or_compute(const std::string& key, const std::function<Loss()>& compute) {
  {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  Loss value = compute();
  std::lock_guard lock(mutex_);
  return entries_.emplace(key, std::move(value)).first->second;
}

std::size_t EpsilonCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

CovertRate covert_sum_rate(const Session& session, const CovertSet& covert, const Topology& topo,
                           const CovertRateOptions& options) {
  const auto visible = max_sum_rate_visible(session, topo);
  const CovertSet active = active_covert(session, covert);
  CovertRate out;
  out.rate = visible;
  if (active.empty()) return out;

  const auto& sim = options.simulation;
  const auto injected = injected_rates(session, active, topo, visible, sim.boost_sources);
  const auto order = topological_order(session);

  bool need_simulation = options.mode == EpsilonMode::Simulated;
  if (options.mode == EpsilonMode::Auto) {
    for (const auto& node : active) need_simulation = need_simulation || has_covert_upstream(session, active, node);
  }
  EpsilonCache::Loss simulated;
  if (need_simulation) {
    auto compute = [&] { return simulate_session(session, active, topo, sim).loss; };
    if (options.cache) {
      std::string key = session.key() + '|' + covert_text(active) + '|' + format_double(sim.delta) + '|' +
                        format_double(sim.horizon) + '|' + std::to_string(sim.seed) + '|' +
                        format_double(sim.proc_delay) + '|' + (sim.boost_sources ? "boost" : "plain") + '|' +
                        std::to_string(sim.batches);
      for (const auto& n : order) key += '|' + n + '=' + format_double(topo.capacity(n));
      simulated = options.cache->get_or_compute(key, compute);
    } else {
      simulated = compute();
    }
    out.used_simulation = true;
  }

  // Walk relays in path order so thinned input rates are known when needed.
  std::vector<double> through = injected;  // real-packet rate of each path at the current point
  for (const auto& node : order) {
    if (!active.count(node)) continue;
    const bool use_sim = options.mode == EpsilonMode::Simulated ||
                         (options.mode == EpsilonMode::Auto && has_covert_upstream(session, active, node));
    double input = 0.0;
    std::vector<std::size_t> paths_here;
    for (std::size_t i = 0; i < session.paths.size(); ++i) {
      if (!is_interior(session.paths[i], node)) continue;
      paths_here.push_back(i);
      input += through[i];
    }
    Estimate eps{0.0, 0.0};
    if (!use_sim && input > 0.0) eps.value = loss_fraction(input, topo.capacity(node), sim.delta);
    for (auto i : paths_here) {
      const Estimate e = use_sim ? simulated.at({i, node}) : eps;
      out.loss[{i, node}] = e;
      through[i] *= 1.0 - e.value;
    }
  }

  out.rate.total = 0.0;
  out.rate.std_error = 0.0;
  for (std::size_t i = 0; i < session.paths.size(); ++i) {
    double rel_var = 0.0;
    for (const auto& [key, e] : out.loss) {
      if (key.first != i || e.std_error == 0.0) continue;
      const double keep = 1.0 - e.value;
      rel_var += keep > 0.0 ? (e.std_error / keep) * (e.std_error / keep) : 0.0;
    }
    double lambda = through[i];
    double se = lambda * std::sqrt(rel_var);
    if (lambda > visible.per_path[i]) {
      lambda = visible.per_path[i];
      se = 0.0;
    }
    out.rate.per_path[i] = lambda;
    out.rate.total += lambda;
    out.rate.std_error += se;
  }
  return out;
}

NetworkConfig read_network(std::istream& in) {
  NetworkConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  std::optional<Session> open;
  double open_prob = 0.0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("network file line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string keyword;
    if (!(words >> keyword)) continue;
    std::vector<std::string> args;
    for (std::string w; words >> w;) args.push_back(w);
    try {
      if (keyword == "node") {
        if (args.size() != 3 || args[1] != "cap") fail("expected 'node <id> cap <C>'");
        cfg.topology.add_node(args[0], parse_double(args[2]));
      } else if (keyword == "edge") {
        if (args.size() != 2) fail("expected 'edge <from> <to>'");
        cfg.topology.add_edge(args[0], args[1]);
      } else if (keyword == "session") {
        if (open) fail("session block not closed with 'end'");
        if (args.empty() || args.size() > 2) fail("expected 'session <probability> [label]'");
        open_prob = parse_double(args[0]);
        open.emplace();
        open->label = args.size() == 2 ? args[1] : "s" + std::to_string(cfg.prior.sessions.size() + 1);
      } else if (keyword == "path") {
        if (!open) fail("'path' outside a session block");
        open->paths.push_back(args);
      } else if (keyword == "end") {
        if (!open) fail("'end' without a session");
        cfg.prior.sessions.emplace_back(open->label, open->paths);
        cfg.prior.probabilities.push_back(open_prob);
        open.reset();
      } else {
        fail("unknown keyword '" + keyword + "'");
      }
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      if (msg.rfind("network file", 0) == 0) throw;
      fail(msg);
    }
  }
  if (open) throw std::invalid_argument("network file: session '" + open->label + "' not closed with 'end'");
  validate(cfg.topology, cfg.prior);
  return cfg;
}

void write_network(std::ostream& out, const NetworkConfig& cfg) {
  for (const auto& [id, cap] : cfg.topology.nodes()) out << "node " << id << " cap " << format_double(cap) << '\n';
  for (const auto& [from, to] : cfg.topology.edges()) out << "edge " << from << ' ' << to << '\n';
  for (std::size_t s = 0; s < cfg.prior.sessions.size(); ++s) {
    const auto& session = cfg.prior.sessions[s];
    out << "session " << format_double(cfg.prior.probabilities[s]) << ' ' << session.label << '\n';
    for (const auto& p : session.paths) out << "path " << join(p, ' ') << '\n';
    out << "end\n";
  }
}

NetworkConfig switching_network(double capacity) {
  NetworkConfig cfg;
  auto& topo = cfg.topology;
  const std::vector<NodeId> sources{"S1", "S2", "S3", "S4"};
  const std::vector<NodeId> dests{"D1", "D2", "D3", "D4"};
  for (const auto& n : sources) topo.add_node(n, capacity);
  for (const auto& n : {"M1", "M2", "M3", "M4"}) topo.add_node(n, capacity);
  for (const auto& n : dests) topo.add_node(n, capacity);
  // S1,S2 enter at M1 and S3,S4 at M3; M2 serves D1,D2 and M4 serves D3,D4.
  auto ingress = [](std::size_t source) { return source < 2 ? "M1" : "M3"; };
  auto egress = [](std::size_t dest) { return dest < 2 ? "M2" : "M4"; };
  for (std::size_t s = 0; s < 4; ++s) topo.add_edge(sources[s], ingress(s));
  for (const auto& in : {"M1", "M3"}) {
    for (const auto& eg : {"M2", "M4"}) topo.add_edge(in, eg);
  }
  for (std::size_t d = 0; d < 4; ++d) topo.add_edge(egress(d), dests[d]);

  std::vector<std::size_t> perm{0, 1, 2, 3};
  do {
    PathSet paths;
    std::string label;
    for (std::size_t s = 0; s < 4; ++s) {
      const auto d = perm[s];
      paths.push_back({sources[s], ingress(s), egress(d), dests[d]});
      if (!label.empty()) label += ',';
      label += sources[s] + ">" + dests[d];
    }
    cfg.prior.sessions.emplace_back(label, std::move(paths));
  } while (std::next_permutation(perm.begin(), perm.end()));
  cfg.prior.probabilities.assign(cfg.prior.sessions.size(), 1.0 / static_cast<double>(cfg.prior.sessions.size()));
  return cfg;
}

}  // namespace anonsched
