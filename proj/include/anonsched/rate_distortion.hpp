#pragma once

// Distortion-rate function by Blahut-Arimoto, and the throughput-anonymity
// tradeoff built on it.

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonsched/anonymity.hpp"

namespace anonsched {

/// Source distribution and loss per (source letter, reproduction letter);
/// +inf marks forbidden pairs.
struct DistortionProblem {
  std::vector<double> prior;
  std::vector<std::vector<double>> distortion;
};

struct BaOptions {
  double gap_tol = 1e-12;        // stopping rule on the Blahut bound gap (nats)
  std::size_t max_iter = 200000;
  double beta_max = 1e4;         // slope of the high-rate end
  double rate_tol = 1e-10;       // bisection stops once the bracket is this tight in bits
};

struct BaSolution {
  double distortion = 0.0;
  double rate_bits = 0.0;
  double beta = 0.0;  // 0 for the exact zero-rate solution
  /// conditional[s][c]: probability of reproduction letter c given source letter s.
  std::vector<std::vector<double>> conditional;
  double gap = 0.0;
  std::size_t iterations = 0;
};

struct BlahutArimotoError : std::runtime_error {
  BaSolution best;
  double gap;
  BlahutArimotoError(const std::string& what, BaSolution best_, double gap_);
};

/// Fixed-slope iteration minimizing I + beta D. Each step is checked to not
/// increase the objective (std::logic_error otherwise). `warm` optionally gives
/// a starting reproduction distribution.
BaSolution blahut_arimoto_slope(const DistortionProblem& problem, double beta, const BaOptions& options = {},
                                std::span<const double> warm = {});

/// D(r): least expected distortion with I(S; reproduction) <= rate_bits.
/// r = 0 is solved exactly as the best single reproduction letter.
BaSolution distortion_rate(const DistortionProblem& problem, double rate_bits, const BaOptions& options = {});

/// Mutual information of a conditional distribution, in bits.
double mutual_information_bits(std::span<const double> prior, const std::vector<std::vector<double>>& conditional);
double expected_distortion(const DistortionProblem& problem, const std::vector<std::vector<double>>& conditional);

DistortionProblem to_problem(const SessionPrior& prior, const DistortionMatrix& matrix);

struct TradeoffPoint {
  double alpha = 0.0;
  double rate = 0.0;        // expected sum-rate
  double info_bits = 0.0;   // I(S; observation) of the policy
  double distortion = 0.0;
  CovertPolicy policy;
};

struct TradeoffCurve {
  double visible_rate = 0.0;  // R at alpha = 0
  double entropy_bits = 0.0;
  std::vector<TradeoffPoint> points;
};

/// R(alpha) = E[Lambda^v] - D(H(S)(1 - alpha)) with the policy mapped back to
/// covert sets. Points are computed in parallel.
TradeoffCurve tradeoff_curve(const SessionPrior& prior, const DistortionMatrix& matrix, double expected_visible,
                             std::span<const double> alphas, const BaOptions& options = {});

}  // namespace anonsched
