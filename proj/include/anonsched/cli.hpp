#pragma once

// Experiment commands behind the `anonsched` tool. Each command writes its
// CSV and report.json files into `out` and returns the process exit code:
// 0 when every in-run check passes, 1 otherwise.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace anonsched::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RelayParams {
  std::string mode = "strict";  // strict | avg | priority | equal
  double cs = 1.0;              // source rate, packets/s (strict, avg)
  double cs1 = 1.0;             // first source rate, packets/s (priority, equal, region)
  double cs2 = 1.0;             // second source rate, packets/s
  double cb = 1.0;              // relay rate, packets/s
  double delta = 1.0;           // strict delay bound, s
  double dbar = 1.0;            // mean delay bound, s (avg)
  std::string order = "S1,S2";  // priority order, highest first
  double horizon = 1e5;         // simulated time, s
  std::uint64_t seed = 1;
  std::size_t batches = 200;
  std::string out = "out";
};

struct RegionParams {
  double cs1 = 1.0;
  double cs2 = 1.0;
  double cb = 2.0;
  double delta = 1.0;
  bool simulate = false;  // add priority corner points measured by simulation
  double horizon = 1e5;
  std::uint64_t seed = 1;
  std::size_t batches = 200;
  std::string out = "out";
};

struct NetworkParams {
  std::string topology;             // network file; empty selects the builtin
  std::string builtin = "switching";
  double capacity = 2.0;            // builtin node capacity, packets/s
  double delta = 1.0;               // covert relay delay bound, s
  double horizon = 2e4;             // cascade simulation window, s
  std::uint64_t seed = 1;
  std::string epsilon = "auto";     // analytic | simulated | auto
  bool boost = true;                // sources feeding a covert first hop send at capacity
  std::size_t batches = 100;
  std::string out = "out";
};

struct TradeoffParams {
  NetworkParams network;
  std::size_t points = 21;          // alpha grid size on [0, 1]
  std::vector<double> alphas;       // explicit grid; overrides `points`
};

struct GenTopologyParams {
  std::string builtin = "switching";
  double capacity = 2.0;
  std::string output = "topology.txt";
};

int cmd_relay(const RelayParams& params, std::ostream& log);
int cmd_region(const RegionParams& params, std::ostream& log);
int cmd_switching(const NetworkParams& params, std::ostream& log);
int cmd_tradeoff(const TradeoffParams& params, std::ostream& log);
int cmd_gen_topology(const GenTopologyParams& params, std::ostream& log);

}  // namespace anonsched::cli
