#pragma once

// Small dense linear programs: maximize c.x subject to row constraints and
// x >= 0. Two-phase tableau simplex with Bland's rule, so degenerate
// problems terminate.

#include <span>
#include <vector>

namespace anonsched {

struct LpConstraint {
  enum class Sense { LessEqual, GreaterEqual, Equal };
  std::vector<double> coeffs;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

LpResult lp_maximize(std::span<const double> objective, std::span<const LpConstraint> constraints,
                     double tol = 1e-11);

}  // namespace anonsched
