#include "anonsched/anonymity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anonsched/parallel.hpp"

namespace anonsched {
namespace {

std::vector<std::pair<CovertSet, double>> only(const CovertSet& covert) { return {{covert, 1.0}}; }

CovertSet restrict_to(const CovertSet& covert, const std::set<NodeId>& relays) {
  CovertSet out;
  for (const auto& n : covert) {
    if (relays.count(n)) out.insert(n);
  }
  return out;
}

// H(S | observation) with logarithms taken by `log_fn`.
template <typename Log>
std::pair<double, double> equivocation(const SessionPrior& prior, const CovertPolicy& policy, Log log_fn) {
  const std::size_t n = prior.sessions.size();
  if (policy.choices.size() != n) throw std::invalid_argument("policy must list choices for every session");
  std::map<Observation, std::map<std::size_t, double>> joint;
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (const auto& [covert, q] : policy.choices[s]) {
      if (!(q >= 0.0)) throw std::invalid_argument("policy probabilities must be >= 0");
      total += q;
      if (q > 0.0) joint[observe(prior.sessions[s], covert)][s] += prior.probabilities[s] * q;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("policy for a session does not sum to 1");
  }
  double conditional = 0.0;
  for (const auto& [obs, row] : joint) {
    double mass = 0.0;
    for (const auto& [s, p] : row) mass += p;
    for (const auto& [s, p] : row) conditional += p * log_fn(mass / p);
  }
  double source = 0.0;
  for (double p : prior.probabilities) {
    if (p > 0.0) source -= p * log_fn(p);
  }
  return {conditional, source};
}

}  // namespace

double entropy_bits(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double entropy_nats(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double entropy_bits(const SessionPrior& prior) { return entropy_bits(prior.probabilities); }

CovertPolicy CovertPolicy::deterministic(const CovertSet& covert, std::size_t sessions) {
  CovertPolicy p;
  p.choices.assign(sessions, only(covert));
  return p;
}

double anonymity_of(const SessionPrior& prior, const CovertPolicy& policy) {
  const auto [conditional, source] = equivocation(prior, policy, [](double x) { return std::log2(x); });
  if (source <= 0.0) return 1.0;
  return std::clamp(conditional / source, 0.0, 1.0);
}

double anonymity_of(const SessionPrior& prior, const CovertSet& covert) {
  return anonymity_of(prior, CovertPolicy::deterministic(covert, prior.sessions.size()));
}

double anonymity_of_nats(const SessionPrior& prior, const CovertPolicy& policy) {
  const auto [conditional, source] = equivocation(prior, policy, [](double x) { return std::log(x); });
  if (source <= 0.0) return 1.0;
  return std::clamp(conditional / source, 0.0, 1.0);
}

double fano_bound(double alpha, const SessionPrior& prior) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("fano_bound: alpha must be in [0, 1]");
  const auto support = std::count_if(prior.probabilities.begin(), prior.probabilities.end(),
                                     [](double p) { return p > 0.0; });
  if (support <= 1) return 0.0;
  const double bound = (alpha * entropy_bits(prior) - 1.0) / std::log2(static_cast<double>(support));
  return std::clamp(bound, 0.0, 1.0);
}

CovertRateTable::CovertRateTable(const Topology& topo, const SessionPrior& prior, CovertRateOptions options)
    : topo_(topo), prior_(prior), options_(options) {
  validate(topo, prior);
  options_.cache = &cache_;
  for (const auto& s : prior.sessions) visible_.push_back(max_sum_rate_visible(s, topo));
}

double CovertRateTable::expected_visible() const {
  double total = 0.0;
  for (std::size_t s = 0; s < visible_.size(); ++s) total += prior_.probabilities[s] * visible_[s].total;
  return total;
}

double CovertRateTable::covert_rate(std::size_t session, const CovertSet& covert) {
  const auto& sess = prior_.sessions.at(session);
  const auto key = std::make_pair(session, restrict_to(covert, sess.interior_relays()));
  {
    std::lock_guard lock(mutex_);
    if (const auto it = rates_.find(key); it != rates_.end()) return it->second;
  }
  const auto result = covert_sum_rate(sess, key.second, topo_, options_);
  std::lock_guard lock(mutex_);
  used_simulation_ = used_simulation_ || result.used_simulation;
  return rates_.emplace(key, result.rate.total).first->second;
}

double CovertRateTable::expected_covert_rate(const CovertSet& covert) {
  double total = 0.0;
  for (std::size_t s = 0; s < prior_.sessions.size(); ++s) {
    total += prior_.probabilities[s] * covert_rate(s, covert);
  }
  return total;
}

bool CovertRateTable::used_simulation() const {
  std::lock_guard lock(mutex_);
  return used_simulation_;
}

CovertSet candidate_relays(const SessionPrior& prior) {
  CovertSet out;
  for (const auto& s : prior.sessions) {
    const auto relays = s.interior_relays();
    out.insert(relays.begin(), relays.end());
  }
  return out;
}

std::vector<DeterministicPoint> enumerate_deterministic(CovertRateTable& table, std::size_t max_relays) {
  const auto relays = candidate_relays(table.prior());
  if (relays.size() > max_relays) {
    throw std::length_error("enumerate_deterministic: " + std::to_string(relays.size()) +
                            " candidate relays exceed the limit of " + std::to_string(max_relays));
  }
  const std::vector<NodeId> ids(relays.begin(), relays.end());
  const std::size_t count = std::size_t{1} << ids.size();
  std::vector<DeterministicPoint> points(count);
  parallel_for(count, [&](std::size_t mask) {
    auto& pt = points[mask];
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (mask >> k & 1u) pt.covert.insert(ids[k]);
    }
    pt.alpha = anonymity_of(table.prior(), pt.covert);
    pt.rate = table.expected_covert_rate(pt.covert);
  });
  return points;
}

InfeasibleAnonymity::InfeasibleAnonymity(double target, double max_alpha_)
    : std::runtime_error("anonymity target " + std::to_string(target) + " is infeasible; the largest attainable is " +
                         std::to_string(max_alpha_)),
      max_alpha(max_alpha_) {}

DeterministicPoint best_deterministic(std::span<const DeterministicPoint> points, double alpha_target) {
  double max_alpha = 0.0;
  for (const auto& p : points) max_alpha = std::max(max_alpha, p.alpha);
  if (alpha_target > 1.0) throw InfeasibleAnonymity(alpha_target, max_alpha);
  const DeterministicPoint* best = nullptr;
  for (const auto& p : points) {
    if (p.alpha < alpha_target - 1e-12) continue;
    if (!best || p.rate > best->rate ||
        (p.rate == best->rate && std::make_pair(p.covert.size(), p.covert) < std::make_pair(best->covert.size(), best->covert))) {
      best = &p;
    }
  }
  if (!best) throw InfeasibleAnonymity(alpha_target, max_alpha);
  return *best;
}

double UpperHull::evaluate(double alpha) const {
  if (vertices.empty()) return -std::numeric_limits<double>::infinity();
  if (alpha <= vertices.front().first) return vertices.front().second;
  if (alpha > vertices.back().first + 1e-12) return -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < vertices.size(); ++k) {
    const auto& [a0, r0] = vertices[k - 1];
    const auto& [a1, r1] = vertices[k];
    if (alpha <= a1) return r0 + (r1 - r0) * (alpha - a0) / (a1 - a0);
  }
  return vertices.back().second;
}

UpperHull convex_hull_deterministic(std::span<const DeterministicPoint> points) {
  if (points.empty()) throw std::invalid_argument("convex_hull_deterministic: no points");
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : points) pts.emplace_back(p.alpha, p.rate);
  // Alpha ascending, highest rate first within equal alpha.
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second > b.second;
  });
  // Start from the highest rate at the largest alpha attaining it.
  double r_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) r_max = std::max(r_max, p.second);
  double a_star = 0.0;
  for (const auto& p : pts) {
    if (p.second == r_max) a_star = std::max(a_star, p.first);
  }
  UpperHull hull;
  auto& h = hull.vertices;
  for (const auto& p : pts) {
    if (p.first < a_star) continue;
    if (!h.empty() && p.first == h.back().first) continue;  // lower rate at the same alpha
    while (h.size() >= 2) {
      const auto& o = h[h.size() - 2];
      const auto& a = h.back();
      const double cross = (a.first - o.first) * (p.second - o.second) - (a.second - o.second) * (p.first - o.first);
      if (cross < 0.0) break;  // a lies strictly above segment o-p
      h.pop_back();
    }
    h.push_back(p);
  }
  return hull;
}

std::vector<std::vector<double>> DistortionMatrix::dense() const {
  std::vector<std::vector<double>> out(rows.size(),
                                       std::vector<double>(columns.size(), std::numeric_limits<double>::infinity()));
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (const auto& [c, d] : rows[s]) out[s][c] = d;
  }
  return out;
}

DistortionMatrix distortion_matrix(CovertRateTable& table) {
  const auto& prior = table.prior();
  const std::size_t n = prior.sessions.size();
  struct Entry {
    Observation obs;
    CovertSet covert;
    double loss;
  };
  std::vector<std::vector<Entry>> per_session(n);
  parallel_for(n, [&](std::size_t s) {
    const auto& sess = prior.sessions[s];
    const auto relays = sess.interior_relays();
    const std::vector<NodeId> ids(relays.begin(), relays.end());
    if (ids.size() > 20) throw std::length_error("distortion_matrix: too many relays in one session");
    const double visible = table.visible(s).total;
    std::map<Observation, CovertSet> seen;
    for (std::size_t mask = 0; mask < (std::size_t{1} << ids.size()); ++mask) {
      CovertSet covert;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (mask >> k & 1u) covert.insert(ids[k]);
      }
      auto obs = observe(sess, covert);
      if (!seen.emplace(obs, covert).second) {
        throw std::logic_error("distortion_matrix: two covert sets give session '" + sess.label +
                               "' the same observation");
      }
      per_session[s].push_back({std::move(obs), covert, visible - table.covert_rate(s, covert)});
    }
  });

  DistortionMatrix m;
  std::map<Observation, std::size_t> index;
  m.rows.resize(n);
  m.covert_of.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& e : per_session[s]) {
      auto [it, fresh] = index.emplace(e.obs, m.columns.size());
      if (fresh) m.columns.push_back(e.obs);
      m.rows[s].emplace_back(it->second, e.loss);
      m.covert_of[s].emplace(it->second, e.covert);
    }
    std::sort(m.rows[s].begin(), m.rows[s].end());
  }
  return m;
}

}  // namespace anonsched
