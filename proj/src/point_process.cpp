#include "anonsched/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "anonsched/format.hpp"
#include "anonsched/random.hpp"

namespace anonsched {

Schedule::Schedule(NodeId node_id, std::vector<double> epochs)
    : Schedule(std::move(node_id), epochs, epochs.empty() ? 0.0 : std::max(0.0, epochs.back())) {}

Schedule::Schedule(NodeId node_id, std::vector<double> epochs, double horizon)
    : node_id_(std::move(node_id)), epochs_(std::move(epochs)), horizon_(horizon) {
  if (!(horizon_ >= 0.0)) throw std::invalid_argument("schedule horizon must be >= 0");
  for (std::size_t i = 0; i < epochs_.size(); ++i) {
    const double t = epochs_[i];
    if (!std::isfinite(t) || t < 0.0 || t > horizon_) {
      throw std::invalid_argument("schedule epoch outside [0, horizon]: " + format_double(t));
    }
    if (i > 0 && !(epochs_[i - 1] < t)) {
      throw std::invalid_argument("schedule epochs must be strictly increasing");
    }
  }
}

Schedule Schedule::window(double begin, double end) const {
  auto lo = std::lower_bound(epochs_.begin(), epochs_.end(), begin);
  auto hi = std::lower_bound(lo, epochs_.end(), end);
  Schedule out;
  out.node_id_ = node_id_;
  out.epochs_.assign(lo, hi);
  out.horizon_ = std::min(horizon_, end);
  return out;
}

RateBound::RateBound(NodeId id, double cap) : node_id(std::move(id)), capacity(cap) {
  if (!(capacity > 0.0) || !std::isfinite(capacity)) {
    throw std::invalid_argument("rate bound for '" + node_id + "' must be finite and positive");
  }
}

Schedule gen_poisson(const GenSpec& spec, NodeId node_id) {
  if (!(spec.rate > 0.0) || !std::isfinite(spec.rate)) {
    throw std::invalid_argument("gen_poisson: rate must be finite and positive");
  }
  if (!(spec.horizon >= 0.0) || !std::isfinite(spec.horizon)) {
    throw std::invalid_argument("gen_poisson: horizon must be finite and >= 0");
  }
  Philox4x32 rng(spec.seed, spec.stream);
  std::vector<double> epochs;
  epochs.reserve(static_cast<std::size_t>(spec.rate * spec.horizon * 1.01 + 16));
  double t = 0.0;
  for (;;) {
    t += rng.exponential(spec.rate);
    if (t > spec.horizon) break;
    // A zero-length gap only happens through rounding; skip it to keep epochs strict.
    if (!epochs.empty() && t <= epochs.back()) continue;
    epochs.push_back(t);
  }
  return Schedule(std::move(node_id), std::move(epochs), spec.horizon);
}

double empirical_rate(const Schedule& schedule) {
  if (schedule.empty()) throw std::domain_error("empirical_rate: rate undefined for an empty schedule");
  const double last = schedule.epochs().back();
  if (last <= 0.0) throw std::domain_error("empirical_rate: rate undefined when Y(n) = 0");
  return static_cast<double>(schedule.size()) / last;
}

Estimate empirical_rate_estimate(const Schedule& schedule) {
  const double rate = empirical_rate(schedule);
  return {rate, rate / std::sqrt(static_cast<double>(schedule.size()))};
}

bool validate_network_schedule(std::span<const Schedule> schedules, std::span<const RateBound> bounds) {
  std::map<NodeId, double> caps;
  for (const auto& b : bounds) caps[b.node_id] = b.capacity;
  bool valid = true;
  for (const auto& s : schedules) {
    auto it = caps.find(s.node_id());
    if (it == caps.end()) {
      throw std::invalid_argument("validate_network_schedule: no rate bound for node '" + s.node_id() + "'");
    }
    if (!s.empty() && empirical_rate(s) > it->second) valid = false;
  }
  return valid;
}

void write_schedule(std::ostream& out, const Schedule& schedule, double capacity) {
  out << "node " << schedule.node_id() << " rate " << format_double(capacity) << '\n';
  for (double t : schedule.epochs()) out << format_double(t) << '\n';
}

ScheduleRecord read_schedule(std::istream& in) {
  std::string line;
  std::string keyword_node, id, keyword_rate, cap_text;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  std::istringstream header(line);
  if (!(header >> keyword_node >> id >> keyword_rate >> cap_text) || keyword_node != "node" ||
      keyword_rate != "rate") {
    throw std::invalid_argument("schedule header must be 'node <id> rate <C>', got '" + line + "'");
  }
  RateBound bound(id, parse_double(cap_text));
  std::vector<double> epochs;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    epochs.push_back(parse_double(line.substr(first, last - first + 1)));
  }
  return {Schedule(id, std::move(epochs)), std::move(bound)};
}

}  // namespace anonsched
