#include "anonsched/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "anonsched/analytic.hpp"
#include "anonsched/anonymity.hpp"
#include "anonsched/format.hpp"
#include "anonsched/network.hpp"
#include "anonsched/point_process.hpp"
#include "anonsched/rate_distortion.hpp"
#include "anonsched/relay.hpp"

namespace anonsched::cli {
namespace {

using json = nlohmann::ordered_json;

// JSON has no infinities; they are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

void require_positive(const char* name, double v) {
  require(std::isfinite(v) && v > 0.0, std::string("--") + name + " must be a positive number (got " +
                                           format_double(v) + ")");
}

void require_delay(const char* name, double v) {
  require(v > 0.0 && !std::isnan(v), std::string("--") + name + " must be > 0 seconds or inf (got " +
                                         format_double(v) + ")");
}

class Report {
 public:
  Report(const std::string& command, json parameters) {
    doc_["metadata"] = {{"command", command}, {"version", kVersion}, {"parameters", std::move(parameters)}};
    doc_["checks"] = json::array();
  }

  void check(const std::string& name, double predicted, const Estimate& empirical, bool pass) {
    doc_["checks"].push_back({{"name", name},
                              {"predicted", number(predicted)},
                              {"empirical", number(empirical.value)},
                              {"sigma", number(empirical.std_error)},
                              {"pass", pass}});
    csv_ << name << ',' << format_double(predicted) << ',' << format_double(empirical.value) << ','
         << format_double(empirical.std_error) << ',' << (pass ? "PASS" : "FAIL") << '\n';
    passed_ = passed_ && pass;
  }

  json& results() { return doc_["results"]; }
  bool passed() const { return passed_; }

  /// Writes report.json and checks.csv.
  void write(const std::filesystem::path& dir, std::ostream& log) {
    doc_["passed"] = passed_;
    std::ofstream(dir / "report.json") << doc_.dump(2) << '\n';
    std::ofstream(dir / "checks.csv") << "check,predicted,empirical,sigma,status\n" << csv_.str();
    for (const auto& c : doc_["checks"]) {
      log << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << '\n';
    }
    log << "wrote " << (dir / "report.json").string() << '\n';
  }

 private:
  json doc_;
  std::ostringstream csv_;
  bool passed_ = true;
};

std::filesystem::path prepare(const std::string& out) {
  require(!out.empty(), "--out must name a directory");
  std::filesystem::create_directories(out);
  return out;
}

std::string covert_name(const CovertSet& covert) {
  if (covert.empty()) return "-";
  std::string s;
  for (const auto& n : covert) s += (s.empty() ? "" : "+") + n;
  return s;
}

// RFC 4180 quoting for fields that contain separators.
std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

Schedule poisson(double rate, double horizon, std::uint64_t seed, std::uint64_t stream, const NodeId& id) {
  return gen_poisson({rate, horizon, seed, stream}, id);
}

json relay_parameters(const RelayParams& p) {
  return {{"mode", p.mode},   {"cs", p.cs},       {"cs1", p.cs1},         {"cs2", p.cs2},
          {"cb", p.cb},       {"delta", number(p.delta)}, {"dbar", p.dbar}, {"order", p.order},
          {"horizon", p.horizon}, {"seed", p.seed}, {"batches", p.batches}};
}

std::vector<NodeId> parse_order(const std::string& text) {
  std::vector<NodeId> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) out.push_back(item);
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end());
  require(sorted == std::vector<NodeId>{"S1", "S2"}, "--order must list S1 and S2 once each, e.g. S2,S1");
  return out;
}

// Departures run past the arrival horizon long enough for the last arrivals
// to be served or expire, so the end of the run adds no drops of its own.
double drain_time(double delta, double source_rate, double relay_rate) {
  if (std::isfinite(delta)) return delta;
  return relay_rate > source_rate ? 50.0 / (relay_rate - source_rate) : 50.0 / relay_rate;
}

// Runs both two-source relays; element k of `streams` is S(k+1).
struct TwoSourceRuns {
  std::vector<Schedule> streams;
  Schedule departures;
};

TwoSourceRuns two_sources(double cs1, double cs2, double cb, double delta, double horizon, std::uint64_t seed) {
  return {{poisson(cs1, horizon, seed, 0, "S1"), poisson(cs2, horizon, seed, 1, "S2")},
          poisson(cb, horizon + drain_time(delta, cs1 + cs2, cb), seed, 2, "B")};
}

std::size_t index_of(const NodeId& id) { return id == "S1" ? 0 : 1; }

}  // namespace

int cmd_relay(const RelayParams& p, std::ostream& log) {
  require(p.mode == "strict" || p.mode == "avg" || p.mode == "priority" || p.mode == "equal",
          "--mode must be one of strict, avg, priority, equal (got '" + p.mode + "')");
  require_positive("cb", p.cb);
  require_positive("horizon", p.horizon);
  require(p.batches >= 2, "--batches must be at least 2");
  const auto dir = prepare(p.out);
  Report report("relay", relay_parameters(p));
  auto& res = report.results();

  if (p.mode == "strict" || p.mode == "avg") {
    require_positive("cs", p.cs);
    if (p.mode == "strict") {
      require_delay("delta", p.delta);
    } else {
      require_positive("dbar", p.dbar);
    }
    const auto arrivals = poisson(p.cs, p.horizon, p.seed, 0, "S");
    const double bound = p.mode == "strict" ? p.delta : strict_delay_for_mean(p.dbar, p.cs, p.cb);
    const auto departures = poisson(p.cb, p.horizon + drain_time(bound, p.cs, p.cb), p.seed, 1, "B");
    res["arrivals"] = arrivals.size();
    res["departures"] = departures.size();
    if (p.mode == "strict") {
      const auto m = bgm(arrivals, departures, p.delta);
      const double predicted = loss_fraction(p.cs, p.cb, p.delta);
      const auto eps = m.drop_fraction_estimate(p.batches);
      report.check("drop fraction", predicted, eps, eps.within(predicted));
      res["relayed"] = m.pairs.size();
      res["dummies"] = m.dummies.size();
      res["mean_delay"] = number(m.mean_delay());
    } else {
      const auto a = avg_delay_relay(arrivals, departures, p.dbar);
      res["strict_bound"] = number(a.strict_bound);
      res["relayed"] = a.match.pairs.size();
      res["dropped"] = a.match.dropped.size();
      if (p.cb - p.cs >= 1.0 / p.dbar) {
        const Estimate drops{static_cast<double>(a.match.dropped.size()), 0.0};
        report.check("zero drops", 0.0, drops, a.match.dropped.empty());
      } else {
        const double dstar = strict_delay_for_mean(p.dbar, p.cs, p.cb);
        res["predicted_strict_bound"] = number(dstar);
        const auto delay = a.match.mean_delay_estimate(p.batches);
        report.check("mean delay", p.dbar, delay, delay.within(p.dbar));
        const double predicted = loss_fraction(p.cs, p.cb, dstar);
        const auto eps = a.match.drop_fraction_estimate(p.batches);
        report.check("drop fraction", predicted, eps, eps.within(predicted));
      }
    }
  } else {
    require_positive("cs1", p.cs1);
    require_positive("cs2", p.cs2);
    require_delay("delta", p.delta);
    const double rate[2] = {p.cs1, p.cs2};
    const auto run = two_sources(p.cs1, p.cs2, p.cb, p.delta, p.horizon, p.seed);
    if (p.mode == "priority") {
      const auto order = parse_order(p.order);
      const auto results = priority_relay(run.streams, run.departures, PriorityOrder(order), p.delta);
      const std::size_t top = index_of(order.front());
      const double predicted = loss_fraction(rate[top], p.cb, p.delta);
      const auto eps = results[top].drop_fraction_estimate(p.batches);
      report.check(order.front() + " drop fraction", predicted, eps, eps.within(predicted));
      for (std::size_t k = 0; k < 2; ++k) {
        res["S" + std::to_string(k + 1)] = {{"drop_fraction", results[k].drop_fraction()},
                                            {"relayed_rate", results[k].pairs.size() / p.horizon}};
      }
    } else {
      const auto results = equal_priority_relay(run.streams, run.departures, p.delta);
      const double predicted = loss_fraction(p.cs1 + p.cs2, p.cb, p.delta);
      for (std::size_t k = 0; k < 2; ++k) {
        const auto eps = results[k].drop_fraction_estimate(p.batches);
        const std::string name = "S" + std::to_string(k + 1);
        report.check(name + " drop fraction", predicted, eps, eps.within(predicted));
        res[name] = {{"drop_fraction", results[k].drop_fraction()},
                     {"relayed_rate", results[k].pairs.size() / p.horizon}};
      }
    }
  }
  report.write(dir, log);
  return report.passed() ? 0 : 1;
}

int cmd_region(const RegionParams& p, std::ostream& log) {
  require_positive("cs1", p.cs1);
  require_positive("cs2", p.cs2);
  require_positive("cb", p.cb);
  require_delay("delta", p.delta);
  if (p.simulate) require_positive("horizon", p.horizon);
  const auto dir = prepare(p.out);
  Report report("region", {{"cs1", p.cs1},
                           {"cs2", p.cs2},
                           {"cb", p.cb},
                           {"delta", number(p.delta)},
                           {"simulate", p.simulate},
                           {"horizon", p.horizon},
                           {"seed", p.seed},
                           {"batches", p.batches}});
  const auto region = two_source_region(p.cs1, p.cs2, p.cb, p.delta);

  bool contained = true;
  for (const auto& v : region.inner) contained = contained && region.outer_contains(v, 1e-9);
  report.check("inner inside outer", 1.0, {contained ? 1.0 : 0.0, 0.0}, contained);
  auto& res = report.results();
  res["individual_cap"] = {region.individual_cap[0], region.individual_cap[1]};
  res["sum_cap"] = region.sum_cap;
  res["max_sum_point"] = {region.max_sum_point[0], region.max_sum_point[1]};
  res["slope"] = {number(region.slope[0]), number(region.slope[1])};
  res["intercept"] = {number(region.intercept[0]), number(region.intercept[1])};

  std::ostringstream csv;
  write_region_csv(csv, region);
  if (p.simulate) {
    const double rate[2] = {p.cs1, p.cs2};
    const auto run = two_sources(p.cs1, p.cs2, p.cb, p.delta, p.horizon, p.seed);
    std::vector<RatePoint> corners{{0.0, 0.0}, {region.individual_cap[0], 0.0}, {0.0, region.individual_cap[1]}};
    for (const auto& order : {std::vector<NodeId>{"S1", "S2"}, std::vector<NodeId>{"S2", "S1"}}) {
      const auto results = priority_relay(run.streams, run.departures, PriorityOrder(order), p.delta);
      const std::size_t top = index_of(order.front());
      const double predicted = loss_fraction(rate[top], p.cb, p.delta);
      const auto eps = results[top].drop_fraction_estimate(p.batches);
      report.check(order.front() + " first: " + order.front() + " drop fraction", predicted, eps,
                   eps.within(predicted));
      const RatePoint corner{results[0].pairs.size() / p.horizon, results[1].pairs.size() / p.horizon};
      corners.push_back(corner);
      res["corner_" + order.front() + "_first"] = {corner[0], corner[1]};
    }
    const auto equal = equal_priority_relay(run.streams, run.departures, p.delta);
    const double predicted = loss_fraction(p.cs1 + p.cs2, p.cb, p.delta);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto eps = equal[k].drop_fraction_estimate(p.batches);
      report.check("equal priority: S" + std::to_string(k + 1) + " drop fraction", predicted, eps,
                   eps.within(predicted));
    }
    corners.push_back({equal[0].pairs.size() / p.horizon, equal[1].pairs.size() / p.horizon});
    const auto simulated = convex_hull(corners);
    for (std::size_t k = 0; k < simulated.size(); ++k) {
      csv << "simulated," << k << ',' << format_double(simulated[k][0]) << ',' << format_double(simulated[k][1])
          << '\n';
    }
  }
  std::ofstream(dir / "region.csv") << csv.str();
  report.write(dir, log);
  return report.passed() ? 0 : 1;
}

namespace {

NetworkConfig load_network(const NetworkParams& p) {
  if (!p.topology.empty()) {
    std::ifstream in(p.topology);
    require(static_cast<bool>(in), "--topology: cannot open '" + p.topology + "'");
    return read_network(in);
  }
  require(p.builtin == "switching", "--builtin must be 'switching' (got '" + p.builtin + "')");
  require_positive("capacity", p.capacity);
  return switching_network(p.capacity);
}

CovertRateOptions rate_options(const NetworkParams& p) {
  require_delay("delta", p.delta);
  require_positive("horizon", p.horizon);
  require(p.batches >= 2, "--batches must be at least 2");
  CovertRateOptions o;
  if (p.epsilon == "analytic") {
    o.mode = EpsilonMode::Analytic;
  } else if (p.epsilon == "simulated") {
    o.mode = EpsilonMode::Simulated;
  } else {
    require(p.epsilon == "auto", "--epsilon must be one of analytic, simulated, auto (got '" + p.epsilon + "')");
    o.mode = EpsilonMode::Auto;
  }
  o.simulation.delta = p.delta;
  o.simulation.horizon = p.horizon;
  o.simulation.seed = p.seed;
  o.simulation.boost_sources = p.boost;
  o.simulation.batches = p.batches;
  return o;
}

json network_parameters(const NetworkParams& p) {
  return {{"topology", p.topology.empty() ? json(nullptr) : json(p.topology)},
          {"builtin", p.builtin},
          {"capacity", p.capacity},
          {"delta", number(p.delta)},
          {"horizon", p.horizon},
          {"seed", p.seed},
          {"epsilon", p.epsilon},
          {"boost", p.boost},
          {"batches", p.batches}};
}

}  // namespace

int cmd_switching(const NetworkParams& p, std::ostream& log) {
  const auto net = load_network(p);
  const auto options = rate_options(p);
  const auto dir = prepare(p.out);
  Report report("switching", network_parameters(p));
  CovertRateTable table(net.topology, net.prior, options);
  const double h = entropy_bits(net.prior);
  const double visible = table.expected_visible();
  const auto points = enumerate_deterministic(table);

  std::ofstream csv(dir / "subsets.csv");
  csv << "covert,alpha,expected_rate\n";
  for (const auto& pt : points) {
    csv << covert_name(pt.covert) << ',' << format_double(pt.alpha) << ',' << format_double(pt.rate) << '\n';
  }

  auto& res = report.results();
  res["entropy_bits"] = h;
  res["expected_visible_rate"] = visible;
  res["used_simulation"] = table.used_simulation();
  res["sets"] = json::array();
  const bool builtin = p.topology.empty();
  const std::vector<CovertSet> named{{}, {"M1", "M3"}, {"M2", "M4"}, {"M1", "M2", "M3", "M4"}};
  for (const auto& covert : named) {
    if (!builtin) break;
    res["sets"].push_back({{"covert", covert_name(covert)},
                           {"alpha", anonymity_of(net.prior, covert)},
                           {"expected_rate", table.expected_covert_rate(covert)}});
  }
  if (builtin) {
    const double exact[3] = {std::log2(4.0) / std::log2(24.0),
                             (std::log2(4.0) / 3.0 + 2.0 * std::log2(16.0) / 3.0) / std::log2(24.0), 1.0};
    for (std::size_t k = 0; k < 3; ++k) {
      const double a = anonymity_of(net.prior, named[k]);
      report.check("alpha(" + covert_name(named[k]) + ")", exact[k], {a, 0.0}, std::abs(a - exact[k]) <= 1e-9);
    }
    report.check("H(S) bits", std::log2(24.0), {h, 0.0}, std::abs(h - std::log2(24.0)) <= 1e-9);
    report.check("visible sum-rate", 2.0 * p.capacity, {visible, 0.0}, std::abs(visible - 2.0 * p.capacity) <= 1e-9);
  }
  report.write(dir, log);
  return report.passed() ? 0 : 1;
}

int cmd_tradeoff(const TradeoffParams& params, std::ostream& log) {
  const auto& p = params.network;
  const auto net = load_network(p);
  const auto options = rate_options(p);
  std::vector<double> alphas = params.alphas;
  if (alphas.empty()) {
    require(params.points >= 2, "--points must be at least 2");
    for (std::size_t k = 0; k < params.points; ++k) alphas.push_back(static_cast<double>(k) / (params.points - 1));
  }
  for (double a : alphas) require(a >= 0.0 && a <= 1.0, "alpha grid values must lie in [0, 1]");
  std::sort(alphas.begin(), alphas.end());
  const auto dir = prepare(p.out);

  auto parameters = network_parameters(p);
  parameters["alphas"] = alphas;
  Report report("tradeoff", parameters);
  CovertRateTable table(net.topology, net.prior, options);
  const auto points = enumerate_deterministic(table);
  const auto hull = convex_hull_deterministic(points);
  const auto matrix = distortion_matrix(table);
  const double visible = table.expected_visible();

  // The whole grid in parallel; on a solver failure redo it point by point to
  // report which alpha failed and how far from converged it was.
  std::vector<std::optional<TradeoffPoint>> curve(alphas.size());
  json failures = json::array();
  try {
    auto full = tradeoff_curve(net.prior, matrix, visible, alphas);
    for (std::size_t k = 0; k < alphas.size(); ++k) curve[k] = std::move(full.points[k]);
  } catch (const BlahutArimotoError&) {
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      try {
        auto one = tradeoff_curve(net.prior, matrix, visible, std::span<const double>(&alphas[k], 1));
        curve[k] = std::move(one.points.front());
      } catch (const BlahutArimotoError& e) {
        failures.push_back({{"alpha", alphas[k]},
                            {"message", e.what()},
                            {"gap", number(e.gap)},
                            {"iterations", e.best.iterations}});
      }
    }
  }

  std::ofstream det(dir / "deterministic.csv");
  det << "covert,alpha,rate\n";
  for (const auto& pt : points) {
    det << covert_name(pt.covert) << ',' << format_double(pt.alpha) << ',' << format_double(pt.rate) << '\n';
  }
  std::ofstream hull_csv(dir / "hull.csv");
  hull_csv << "alpha,rate\n";
  for (const auto& [a, r] : hull.vertices) hull_csv << format_double(a) << ',' << format_double(r) << '\n';

  std::ofstream curve_csv(dir / "tradeoff.csv");
  std::ofstream policy_csv(dir / "policies.csv");
  curve_csv << "alpha,rate,info_bits,hull_rate,policy_id\n";
  policy_csv << "policy_id,session,covert,probability\n";
  bool dominates = true;
  bool monotone = true;
  bool anonymous = true;
  double previous = std::numeric_limits<double>::infinity();
  double worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const double floor = hull.evaluate(alphas[k]);
    if (!curve[k]) {
      curve_csv << format_double(alphas[k]) << ",nan,nan," << format_double(floor) << ",-\n";
      continue;
    }
    const auto& pt = *curve[k];
    curve_csv << format_double(pt.alpha) << ',' << format_double(pt.rate) << ',' << format_double(pt.info_bits) << ','
              << format_double(floor) << ',' << k << '\n';
    for (std::size_t s = 0; s < pt.policy.choices.size(); ++s) {
      for (const auto& [covert, q] : pt.policy.choices[s]) {
        if (q < 1e-15) continue;
        policy_csv << k << ',' << csv_field(net.prior.sessions[s].label) << ',' << covert_name(covert) << ',' << format_sig(q, 12)
                   << '\n';
      }
    }
    if (std::isfinite(floor)) {
      worst_margin = std::min(worst_margin, pt.rate - floor);
      dominates = dominates && pt.rate >= floor - 1e-9;
    }
    monotone = monotone && pt.rate <= previous + 1e-9;
    previous = pt.rate;
    anonymous = anonymous && anonymity_of(net.prior, pt.policy) >= pt.alpha - 1e-9;
  }

  report.check("solver converged at every alpha", 0.0, {static_cast<double>(failures.size()), 0.0}, failures.empty());
  report.check("randomized >= deterministic hull", 0.0, {std::isfinite(worst_margin) ? worst_margin : 0.0, 0.0},
               dominates);
  report.check("rate nonincreasing in alpha", 1.0, {monotone ? 1.0 : 0.0, 0.0}, monotone);
  report.check("policy anonymity meets target", 1.0, {anonymous ? 1.0 : 0.0, 0.0}, anonymous);
  auto& res = report.results();
  res["entropy_bits"] = entropy_bits(net.prior);
  res["expected_visible_rate"] = visible;
  res["used_simulation"] = table.used_simulation();
  res["observations"] = matrix.columns.size();
  res["failures"] = failures;
  report.write(dir, log);
  return report.passed() ? 0 : 1;
}

int cmd_gen_topology(const GenTopologyParams& p, std::ostream& log) {
  require(p.builtin == "switching", "--builtin must be 'switching' (got '" + p.builtin + "')");
  require_positive("capacity", p.capacity);
  require(!p.output.empty(), "--output must name a file");
  const auto parent = std::filesystem::path(p.output).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(p.output);
  require(static_cast<bool>(out), "--output: cannot write '" + p.output + "'");
  write_network(out, switching_network(p.capacity));
  log << "wrote " << p.output << '\n';
  return 0;
}

}  // namespace anonsched::cli
