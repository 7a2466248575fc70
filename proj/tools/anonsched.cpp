// anonsched: relay, region, switching, tradeoff and gen-topology experiments.
//
// Every option can also be given in a JSON file passed with --config, keyed
// by the option's long name without dashes. Values from the file override
// values from the command line.

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "anonsched/cli.hpp"

namespace {

using json = nlohmann::json;
using namespace anonsched::cli;

// Registers each option with CLI11 and with the JSON config overlay.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_, "JSON file of option values; overrides the command line")
        ->check(CLI::ExistingFile);
  }

  template <typename T>
  void option(const std::string& name, T& field, const std::string& help) {
    app_->add_option("--" + name, field, help)->capture_default_str();
    setters_[name] = [&field](const json& v) { field = v.get<T>(); };
  }

  void flag(const std::string& name, bool& field, const std::string& help) {
    app_->add_flag("--" + name + ",!--no-" + name, field, help)->capture_default_str();
    setters_[name] = [&field](const json& v) { field = v.get<bool>(); };
  }

  void apply_config() const {
    if (config_.empty()) return;
    std::ifstream in(config_);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config '" + config_ + "': " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("config '" + config_ + "' must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        std::string known;
        for (const auto& [name, _] : setters_) known += (known.empty() ? "" : ", ") + name;
        throw std::invalid_argument("config '" + config_ + "': unknown key '" + key + "' (known: " + known + ")");
      }
      try {
        it->second(value);
      } catch (const json::exception&) {
        throw std::invalid_argument("config '" + config_ + "': key '" + key + "' has the wrong type (" +
                                    value.dump() + ")");
      }
    }
  }

 private:
  CLI::App* app_;
  std::string config_;
  std::map<std::string, std::function<void(const json&)>> setters_;
};

void bind_network(Binder& b, NetworkParams& p) {
  b.option("topology", p.topology, "network file (node/edge/session/path lines); empty uses --builtin");
  b.option("builtin", p.builtin, "builtin network when no --topology is given: switching");
  b.option("capacity", p.capacity, "builtin node capacity, packets/s");
  b.option("delta", p.delta, "strict delay bound at covert relays, s (inf allowed)");
  b.option("horizon", p.horizon, "simulation window for cascaded covert relays, s");
  b.option("seed", p.seed, "random seed");
  b.option("epsilon", p.epsilon, "covert loss source: analytic, simulated or auto");
  b.flag("boost", p.boost, "sources whose first hop is covert send at spare capacity");
  b.option("batches", p.batches, "batches for standard errors");
  b.option("out", p.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anonymous scheduling experiments: delay-bounded relaying, covert relay selection and the "
               "throughput-anonymity tradeoff."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  RelayParams relay;
  bool relay_region = false;
  bool relay_simulate = false;
  auto* relay_cmd = app.add_subcommand("relay", "simulate one relay and compare with the closed forms");
  Binder relay_bind(relay_cmd);
  relay_bind.option("mode", relay.mode, "strict, avg, priority or equal");
  relay_bind.option("cs", relay.cs, "source rate, packets/s (strict, avg)");
  relay_bind.option("cs1", relay.cs1, "first source rate, packets/s (priority, equal, --region)");
  relay_bind.option("cs2", relay.cs2, "second source rate, packets/s (priority, equal, --region)");
  relay_bind.option("cb", relay.cb, "relay rate, packets/s");
  relay_bind.option("delta", relay.delta, "strict delay bound, s (inf allowed)");
  relay_bind.option("dbar", relay.dbar, "mean delay bound, s (avg)");
  relay_bind.option("order", relay.order, "priority order, highest first (priority)");
  relay_bind.option("horizon", relay.horizon, "simulated time, s");
  relay_bind.option("seed", relay.seed, "random seed");
  relay_bind.option("batches", relay.batches, "batches for standard errors");
  relay_bind.option("out", relay.out, "output directory");
  relay_bind.flag("region", relay_region, "run the two-source region command instead");
  relay_bind.flag("simulate", relay_simulate, "with --region: add simulated priority corners");

  RegionParams region;
  auto* region_cmd = app.add_subcommand("region", "two-source rate region bounds (CSV vertices)");
  Binder region_bind(region_cmd);
  region_bind.option("cs1", region.cs1, "first source rate, packets/s");
  region_bind.option("cs2", region.cs2, "second source rate, packets/s");
  region_bind.option("cb", region.cb, "relay rate, packets/s");
  region_bind.option("delta", region.delta, "strict delay bound, s (inf allowed)");
  region_bind.flag("simulate", region.simulate, "add priority corner points measured by simulation");
  region_bind.option("horizon", region.horizon, "simulated time, s");
  region_bind.option("seed", region.seed, "random seed");
  region_bind.option("batches", region.batches, "batches for standard errors");
  region_bind.option("out", region.out, "output directory");

  NetworkParams switching;
  auto* switching_cmd = app.add_subcommand("switching", "anonymity and sum-rate of every covert relay subset");
  Binder switching_bind(switching_cmd);
  bind_network(switching_bind, switching);

  TradeoffParams tradeoff;
  auto* tradeoff_cmd = app.add_subcommand("tradeoff", "sum-rate versus anonymity, deterministic and randomized");
  Binder tradeoff_bind(tradeoff_cmd);
  bind_network(tradeoff_bind, tradeoff.network);
  tradeoff_bind.option("points", tradeoff.points, "size of the uniform alpha grid on [0, 1]");
  tradeoff_bind.option("alphas", tradeoff.alphas, "explicit alpha grid; overrides --points");
  tradeoff_cmd->get_option("--alphas")->delimiter(',');

  GenTopologyParams gen;
  auto* gen_cmd = app.add_subcommand("gen-topology", "write a builtin network in the text format");
  Binder gen_bind(gen_cmd);
  gen_bind.option("builtin", gen.builtin, "network to write: switching");
  gen_bind.option("capacity", gen.capacity, "node capacity, packets/s");
  gen_bind.option("output", gen.output, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (relay_cmd->parsed()) {
      relay_bind.apply_config();
      if (!relay_region) return cmd_relay(relay, std::cout);
      region = {relay.cs1, relay.cs2, relay.cb, relay.delta, relay_simulate, relay.horizon, relay.seed,
                relay.batches, relay.out};
      return cmd_region(region, std::cout);
    }
    if (region_cmd->parsed()) {
      region_bind.apply_config();
      return cmd_region(region, std::cout);
    }
    if (switching_cmd->parsed()) {
      switching_bind.apply_config();
      return cmd_switching(switching, std::cout);
    }
    if (tradeoff_cmd->parsed()) {
      tradeoff_bind.apply_config();
      return cmd_tradeoff(tradeoff, std::cout);
    }
    gen_bind.apply_config();
    return cmd_gen_topology(gen, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
